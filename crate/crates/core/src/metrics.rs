//! Explanation quality metrics: fidelity, agreement between explanations, and
//! sensitivity across neighboring items.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ExplanationVector, QoiKind, Subject};
use crate::qoi::PayoffContext;
use crate::scalar::Scalar;
use crate::scoring::{rank_all, Ranking, ScoringFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimilarityKind {
    /// One minus the share of discordant feature pairs between the two
    /// importance orderings.
    #[serde(rename = "kendall")]
    Kendall,
    /// Jaccard index of the two top-2 feature sets.
    #[serde(rename = "jaccard-top2")]
    JaccardTop2,
    /// `1 − ‖ê1 − ê2‖ / 2` over unit-normalized vectors.
    #[serde(rename = "euclid-unit")]
    EuclidUnit,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 3] = [
        SimilarityKind::Kendall,
        SimilarityKind::JaccardTop2,
        SimilarityKind::EuclidUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimilarityKind::Kendall => "kendall",
            SimilarityKind::JaccardTop2 => "jaccard-top2",
            SimilarityKind::EuclidUnit => "euclid-unit",
        }
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimilarityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown similarity kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeighborKind {
    /// The `count` nearest items in z-scored feature space.
    #[serde(rename = "feature-knn")]
    FeatureKnn,
    /// Items ranked within `count` positions.
    #[serde(rename = "rank-window")]
    RankWindow,
}

impl FromStr for NeighborKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feature-knn" => Ok(NeighborKind::FeatureKnn),
            "rank-window" => Ok(NeighborKind::RankWindow),
            other => Err(Error::validation(format!("unknown neighbor kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSpec {
    pub kind: NeighborKind,
    pub count: usize,
}

impl Default for NeighborSpec {
    fn default() -> Self {
        NeighborSpec {
            kind: NeighborKind::FeatureKnn,
            count: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SensitivityTriple<T: Scalar = f64> {
    pub reference: usize,
    pub neighbor: usize,
    pub explanation_distance: T,
    pub rank_distance: usize,
    pub feature_distance: T,
}

/// How well an explanation reconstructs the observed outcome.
///
/// Item kinds: `1 − |qoi_value − reconstruction| / z`, clamped to `[0, 1]`.
/// Pairwise kinds: `qoi_value` is the observed difference (partner minus
/// item, in payoff units) and the result is 1 when the sign of `Σφ` matches
/// it, 0 otherwise.
pub fn fidelity<T: Scalar>(expl: &ExplanationVector<T>, qoi_value: T, z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Err(Error::validation(format!("normalizer must be positive, got {z}")));
    }
    if expl.qoi.is_pairwise() {
        let agree = sign(expl.total()) == sign(qoi_value);
        return Ok(if agree { T::one() } else { T::zero() });
    }
    let gap = (qoi_value - expl.reconstruction).abs() / z;
    Ok((T::one() - gap).max(T::zero()).min(T::one()))
}

fn sign<T: Scalar>(x: T) -> i8 {
    if x > T::zero() {
        1
    } else if x < T::zero() {
        -1
    } else {
        0
    }
}

/// Largest possible distance between two outcomes of `qoi`: `n` for ranks,
/// the observed score range for scores (1 if all scores tie), 1 for top-k.
pub fn normalizer<T: Scalar>(qoi: QoiKind, ranking: &Ranking<T>) -> T {
    match qoi.item_kind() {
        QoiKind::Rank => T::count(ranking.len()),
        QoiKind::Score => {
            let (lo, hi) = ranking
                .scores()
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &s| (lo.min(s), hi.max(s)));
            let range = hi - lo;
            if range > T::zero() {
                range
            } else {
                T::one()
            }
        }
        _ => T::one(),
    }
}

/// Observed outcome an explanation should reconstruct.
fn observed<T: Scalar>(
    expl: &ExplanationVector<T>,
    dataset: &Dataset<T>,
    scorer: &ScoringFunction<T>,
    ranking: &Ranking<T>,
    qoi: QoiKind,
) -> Result<T> {
    match expl.subject {
        Subject::Item(v) => {
            let ctx = PayoffContext::new(dataset, scorer, ranking, qoi, v)?;
            ctx.payoff_one(dataset.row(v))
        }
        Subject::Pair { item, partner } => {
            dataset.check_index(partner)?;
            let outcome = |i: usize| match qoi.item_kind() {
                QoiKind::Score => ranking.score_of(i),
                QoiKind::Rank => T::count(ranking.rank_of(i)),
                QoiKind::TopK(k) => {
                    if ranking.rank_of(i) <= k {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                _ => unreachable!(),
            };
            Ok(outcome(partner) - outcome(item))
        }
    }
}

/// Mean fidelity over a batch of explanations of one QoI.
pub fn method_fidelity<T: Scalar>(
    expls: &[ExplanationVector<T>],
    dataset: &Dataset<T>,
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
) -> Result<T> {
    if expls.is_empty() {
        return Err(Error::validation("no explanations to evaluate"));
    }
    let ranking = rank_all(scorer, dataset)?;
    let z = normalizer(qoi, &ranking);
    let mut acc = T::zero();
    for e in expls {
        if e.qoi != qoi {
            return Err(Error::validation(format!(
                "explanation is for {}, expected {qoi}",
                e.qoi
            )));
        }
        if e.d() != dataset.d() {
            return Err(Error::validation("explanation width does not match dataset"));
        }
        acc += fidelity(e, observed(e, dataset, scorer, &ranking, qoi)?, z)?;
    }
    Ok(acc / T::count(expls.len()))
}

/// Features by decreasing `|φ|`, ties by ascending index.
fn importance_order<T: Scalar>(e: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..e.len()).collect();
    idx.sort_by(|&a, &b| {
        e[b].abs()
            .partial_cmp(&e[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

pub fn similarity<T: Scalar>(e1: &[T], e2: &[T], kind: SimilarityKind) -> Result<T> {
    if e1.len() != e2.len() {
        return Err(Error::validation("contribution vectors differ in length"));
    }
    let d = e1.len();
    if d < 2 {
        return Err(Error::validation("similarity needs at least two features"));
    }
    match kind {
        SimilarityKind::Kendall => {
            let pos = |e: &[T]| {
                let mut p = vec![0; d];
                for (r, j) in importance_order(e).into_iter().enumerate() {
                    p[j] = r;
                }
                p
            };
            let (p1, p2) = (pos(e1), pos(e2));
            let mut discordant = 0usize;
            for a in 0..d {
                for b in a + 1..d {
                    if (p1[a] < p1[b]) != (p2[a] < p2[b]) {
                        discordant += 1;
                    }
                }
            }
            let pairs = d * (d - 1) / 2;
            Ok(T::one() - T::count(discordant) / T::count(pairs))
        }
        SimilarityKind::JaccardTop2 => {
            let t1 = &importance_order(e1)[..2];
            let t2 = &importance_order(e2)[..2];
            let common = t1.iter().filter(|j| t2.contains(j)).count();
            Ok(T::count(common) / T::count(4 - common))
        }
        SimilarityKind::EuclidUnit => {
            let norm = |e: &[T]| e.iter().map(|&x| x * x).sum::<T>().sqrt();
            let (n1, n2) = (norm(e1), norm(e2));
            match (n1 > T::zero(), n2 > T::zero()) {
                (false, false) => Ok(T::one()),
                (true, false) | (false, true) => Ok(T::zero()),
                (true, true) => {
                    let dist = e1
                        .iter()
                        .zip(e2)
                        .map(|(&a, &b)| {
                            let diff = a / n1 - b / n2;
                            diff * diff
                        })
                        .sum::<T>()
                        .sqrt();
                    Ok((T::one() - dist / T::lit(2.0)).max(T::zero()))
                }
            }
        }
    }
}

/// Mean similarity of two aligned explanation lists.
pub fn method_agreement<T: Scalar>(
    expls_g: &[ExplanationVector<T>],
    expls_q: &[ExplanationVector<T>],
    kind: SimilarityKind,
) -> Result<T> {
    if expls_g.len() != expls_q.len() {
        return Err(Error::validation("explanation lists differ in length"));
    }
    if expls_g.is_empty() {
        return Err(Error::validation("no explanations to compare"));
    }
    let mut acc = T::zero();
    for (g, q) in expls_g.iter().zip(expls_q) {
        if g.subject != q.subject {
            return Err(Error::validation("explanation lists are not aligned"));
        }
        acc += similarity(&g.contributions, &q.contributions, kind)?;
    }
    Ok(acc / T::count(expls_g.len()))
}

/// Columns standardized to zero mean and unit (population) deviation;
/// constant columns become zero.
fn zscored<T: Scalar>(dataset: &Dataset<T>) -> Vec<T> {
    let (n, d) = (dataset.n(), dataset.d());
    let mut out = vec![T::zero(); n * d];
    for j in 0..d {
        let col = dataset.column(j);
        let mean = crate::scalar::mean(&col);
        let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / T::count(n);
        let sd = var.sqrt();
        if sd > T::zero() {
            for (i, &x) in col.iter().enumerate() {
                out[i * d + j] = (x - mean) / sd;
            }
        }
    }
    out
}

fn euclid<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// Neighbors of every item, in ascending distance (feature-knn) or rank
/// (rank-window) order.
pub fn neighbors<T: Scalar>(
    dataset: &Dataset<T>,
    ranking: &Ranking<T>,
    nbr: NeighborSpec,
) -> Result<Vec<Vec<usize>>> {
    let n = dataset.n();
    if nbr.count == 0 || nbr.count >= n {
        return Err(Error::validation(format!(
            "neighbor count {} out of range [1, {}]",
            nbr.count,
            n.saturating_sub(1)
        )));
    }
    if ranking.len() != n {
        return Err(Error::validation("ranking does not match dataset"));
    }
    match nbr.kind {
        NeighborKind::FeatureKnn => {
            let z = zscored(dataset);
            let d = dataset.d();
            Ok((0..n)
                .map(|v| {
                    let zv = &z[v * d..(v + 1) * d];
                    let mut cand: Vec<(T, usize)> = (0..n)
                        .filter(|&u| u != v)
                        .map(|u| (euclid(zv, &z[u * d..(u + 1) * d]), u))
                        .collect();
                    cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                    cand.truncate(nbr.count);
                    cand.into_iter().map(|(_, u)| u).collect()
                })
                .collect())
        }
        NeighborKind::RankWindow => Ok((0..n)
            .map(|v| {
                let r = ranking.rank_of(v);
                let lo = r.saturating_sub(nbr.count).max(1);
                let hi = (r + nbr.count).min(n);
                (lo..=hi)
                    .filter(|&q| q != r)
                    .map(|q| ranking.order()[q - 1])
                    .collect()
            })
            .collect()),
    }
}

/// Mean agreement between each item's explanation and its neighbors', plus
/// the per-pair distances for scatter plots.
///
/// `expls[i]` must explain item `i`.
pub fn sensitivity<T: Scalar>(
    dataset: &Dataset<T>,
    expls: &[ExplanationVector<T>],
    nbr: NeighborSpec,
    kind: SimilarityKind,
    ranking: &Ranking<T>,
) -> Result<(T, Vec<SensitivityTriple<T>>)> {
    if expls.len() != dataset.n() {
        return Err(Error::validation("sensitivity needs one explanation per item"));
    }
    for (i, e) in expls.iter().enumerate() {
        if e.subject != Subject::Item(i) {
            return Err(Error::validation(format!("explanation {i} is not for item {i}")));
        }
    }
    let nbrs = neighbors(dataset, ranking, nbr)?;
    let z = zscored(dataset);
    let d = dataset.d();
    let mut acc = T::zero();
    let mut triples = Vec::new();
    for (v, list) in nbrs.iter().enumerate() {
        for &u in list {
            let (ev, eu) = (&expls[v].contributions, &expls[u].contributions);
            acc += similarity(ev, eu, kind)?;
            triples.push(SensitivityTriple {
                reference: v,
                neighbor: u,
                explanation_distance: euclid(ev, eu),
                rank_distance: ranking.rank_of(v).abs_diff(ranking.rank_of(u)),
                feature_distance: euclid(&z[v * d..(v + 1) * d], &z[u * d..(u + 1) * d]),
            });
        }
    }
    let score = acc / T::count(triples.len());
    Ok((score, triples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QoiKind;

    fn expl(c: Vec<f64>, baseline: f64, subject: Subject) -> ExplanationVector {
        ExplanationVector::new(c, QoiKind::Rank, subject, baseline, String::new())
    }

    #[test]
    fn fidelity_cases() {
        let e = expl(vec![-10.0, -5.0], 50.0, Subject::Item(0));
        assert!((fidelity(&e, 35.16, 189.0).unwrap() - (1.0 - 0.16 / 189.0)).abs() < 1e-12);
        assert_eq!(fidelity(&e, 35.0, 189.0).unwrap(), 1.0);
        assert_eq!(fidelity(&e, 35.0 + 189.0, 189.0).unwrap(), 0.0);
        assert_eq!(fidelity(&e, 1e6, 189.0).unwrap(), 0.0);
        assert!(fidelity(&e, 35.0, 0.0).is_err());
    }

    #[test]
    fn pairwise_fidelity_is_sign_agreement() {
        let mut e = expl(vec![1.0, 2.0], 4.0, Subject::Pair { item: 0, partner: 1 });
        e.qoi = QoiKind::PairwiseRank;
        assert_eq!(fidelity(&e, 3.0, 8.0).unwrap(), 1.0);
        assert_eq!(fidelity(&e, -3.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn kendall_and_jaccard_examples() {
        // Features: Sys, AI, Inter, Th.
        let a = [4.0, 3.0, 2.0, 1.0];
        let b = [2.0, 3.0, 4.0, 1.0];
        assert_eq!(similarity(&a, &b, SimilarityKind::Kendall).unwrap(), 0.5);
        assert!((similarity::<f64>(&a, &b, SimilarityKind::JaccardTop2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for k in SimilarityKind::ALL {
            assert!((similarity::<f64>(&a, &a, k).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn euclid_unit_edges() {
        let z = [0.0, 0.0];
        assert_eq!(similarity(&z, &z, SimilarityKind::EuclidUnit).unwrap(), 1.0);
        assert_eq!(similarity(&z, &[1.0, 0.0], SimilarityKind::EuclidUnit).unwrap(), 0.0);
        assert!(similarity::<f64>(&[1.0, 0.0], &[-1.0, 0.0], SimilarityKind::EuclidUnit).unwrap().abs() < 1e-12);
        assert!(similarity(&[1.0], &[1.0], SimilarityKind::Kendall).is_err());
        assert!(similarity(&[1.0, 2.0], &[1.0], SimilarityKind::Kendall).is_err());
    }

    #[test]
    fn agreement_is_a_mean() {
        let g = vec![
            expl(vec![1.0, 2.0], 0.0, Subject::Item(0)),
            expl(vec![1.0, 2.0], 0.0, Subject::Item(1)),
        ];
        let q = vec![
            expl(vec![1.0, 2.0], 0.0, Subject::Item(0)),
            expl(vec![-2.0, 0.0], 0.0, Subject::Item(1)),
        ];
        assert_eq!(method_agreement(&g, &g, SimilarityKind::Kendall).unwrap(), 1.0);
        assert_eq!(method_agreement(&g, &q, SimilarityKind::Kendall).unwrap(), 0.5);
        assert!(method_agreement(&g, &q[..1], SimilarityKind::Kendall).is_err());
    }

    #[test]
    fn rank_window_neighbors() {
        let ds = Dataset::from_rows((0..5).map(|i| vec![i as f64]).collect()).unwrap();
        let r = Ranking::from_scores(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let nb = neighbors(&ds, &r, NeighborSpec { kind: NeighborKind::RankWindow, count: 1 }).unwrap();
        assert_eq!(nb[4], vec![3]);
        assert_eq!(nb[2], vec![3, 1]);
        assert!(neighbors(&ds, &r, NeighborSpec { kind: NeighborKind::RankWindow, count: 5 }).is_err());
    }
}
