//! Box-and-whisker summaries of explanation batches per ranking stratum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExplanationVector, Subject};
use crate::scalar::Scalar;
use crate::scoring::Ranking;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StratumSummary<T: Scalar = f64> {
    /// 1-based; stratum 1 holds the top of the ranking.
    pub stratum: usize,
    pub feature: usize,
    pub count: usize,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub whisker_lo: T,
    pub whisker_hi: T,
}

/// Rank ranges `(lo, hi]` of each stratum, with `hi = ⌈s·n/strata⌉`.
pub fn strata_bounds(n: usize, n_strata: usize) -> Result<Vec<(usize, usize)>> {
    if n_strata == 0 || n_strata > n {
        return Err(Error::validation(format!(
            "strata must be in [1, {n}], got {n_strata}"
        )));
    }
    let edge = |s: usize| (s * n).div_ceil(n_strata);
    Ok((1..=n_strata).map(|s| (edge(s - 1), edge(s))).collect())
}

/// Linearly interpolated quantile of sorted data at `p ∈ [0, 1]`.
fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `(q1, median, q3)` of non-empty data.
pub fn quartiles<T: Scalar>(values: &[T]) -> Result<(T, T, T)> {
    if values.is_empty() {
        return Err(Error::validation("quartiles of empty data"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite contributions"));
    Ok((
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
    ))
}

/// One summary per (stratum, feature), strata outermost.
///
/// `expls[i]` must explain item `i`; strata are taken over `ranking`.
pub fn stratify_aggregate<T: Scalar>(
    expls: &[ExplanationVector<T>],
    ranking: &Ranking<T>,
    n_strata: usize,
) -> Result<Vec<StratumSummary<T>>> {
    let n = ranking.len();
    if expls.len() != n {
        return Err(Error::validation(format!(
            "{} explanations for {n} ranked items",
            expls.len()
        )));
    }
    for (i, e) in expls.iter().enumerate() {
        if e.subject != Subject::Item(i) {
            return Err(Error::validation(format!("explanation {i} is not for item {i}")));
        }
    }
    let d = expls.first().map_or(0, |e| e.d());
    if expls.iter().any(|e| e.d() != d) {
        return Err(Error::validation("explanations differ in width"));
    }
    let mut out = Vec::with_capacity(n_strata * d);
    for (s, (lo, hi)) in strata_bounds(n, n_strata)?.into_iter().enumerate() {
        let members = &ranking.order()[lo..hi];
        for j in 0..d {
            let values: Vec<T> = members.iter().map(|&i| expls[i].contributions[j]).collect();
            let (q1, median, q3) = quartiles(&values)?;
            let (min, max) = values
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
            let reach = (q3 - q1) * T::lit(1.5);
            out.push(StratumSummary {
                stratum: s + 1,
                feature: j,
                count: values.len(),
                q1,
                median,
                q3,
                whisker_lo: (q1 - reach).max(min),
                whisker_hi: (q3 + reach).min(max),
            });
        }
    }
    Ok(out)
}

/// CSV with header `stratum,feature,count,q1,median,q3,whisker_lo,whisker_hi`;
/// features are written by name when `feature_names` covers them.
pub fn strata_csv<T: Scalar>(summaries: &[StratumSummary<T>], feature_names: &[String]) -> String {
    let mut out = String::from("stratum,feature,count,q1,median,q3,whisker_lo,whisker_hi\n");
    for s in summaries {
        let feature = feature_names
            .get(s.feature)
            .cloned()
            .unwrap_or_else(|| s.feature.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.stratum, feature, s.count, s.q1, s.median, s.q3, s.whisker_lo, s.whisker_hi
        ));
    }
    out
}
