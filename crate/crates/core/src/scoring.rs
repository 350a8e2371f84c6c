//! Scoring functions, induced rankings and replacement ranks.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::model::Dataset;
use crate::scalar::Scalar;

/// Per-area exponents of the CSRankings geometric mean (AI, Systems, Theory,
/// Interdisciplinary); they sum to the root.
pub const CSRANKINGS_EXPONENTS: [i32; 4] = [5, 12, 3, 7];
pub const CSRANKINGS_ROOT: i32 = 27;

/// Maps a feature row to a real score.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoringFunction<T: Scalar = f64> {
    Linear { weights: Vec<T> },
    /// `(Π (AC_a^e_a + 1))^(1/27)` over columns (AI, Systems, Theory, Interdisciplinary).
    CsRankings,
    /// `100·(1st serve % + 1st serve pts won + 2nd serve pts won + service pts won
    /// + aces/match − double faults/match)` over six columns in that order.
    Atp,
    Expression { source: String, expr: Expr },
}

impl<T: Scalar> ScoringFunction<T> {
    pub fn linear(weights: &[f64]) -> Self {
        ScoringFunction::Linear {
            weights: weights.iter().map(|&w| T::lit(w)).collect(),
        }
    }

    /// `0.4·gpa + 0.4·sat + 0.2·essay`, the admissions example scorer.
    pub fn admissions() -> Self {
        Self::linear(&[0.4, 0.4, 0.2])
    }

    /// `0.3·TEA + 0.3·RES + 0.3·CIT + 0.025·INC + 0.075·INT`.
    pub fn times_higher_education() -> Self {
        Self::linear(&[0.3, 0.3, 0.3, 0.025, 0.075])
    }

    /// Linear scorers used with the synthetic designs: `f1`..`f3` over two
    /// features, `f4` over three.
    pub fn synthetic(name: &str) -> Result<Self> {
        let w: &[f64] = match name {
            "f1" => &[0.8, 0.2],
            "f2" => &[0.5, 0.5],
            "f3" => &[0.2, 0.8],
            "f4" => &[0.33, 0.33, 0.34],
            other => {
                return Err(Error::validation(format!(
                    "unknown synthetic scorer {other:?}"
                )))
            }
        };
        Ok(Self::linear(w))
    }

    pub fn expression(source: &str, feature_names: &[String]) -> Result<Self> {
        Ok(ScoringFunction::Expression {
            source: source.to_string(),
            expr: expr::compile(source, feature_names)?,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScoringFunction::Linear { .. } => "linear",
            ScoringFunction::CsRankings => "csrankings",
            ScoringFunction::Atp => "atp",
            ScoringFunction::Expression { .. } => "expression",
        }
    }

    /// Checks that the scorer can be applied to rows of width `d`.
    pub fn check_compatible(&self, d: usize) -> Result<()> {
        let need = match self {
            ScoringFunction::Linear { weights } => Some(weights.len()),
            ScoringFunction::CsRankings => Some(CSRANKINGS_EXPONENTS.len()),
            ScoringFunction::Atp => Some(6),
            ScoringFunction::Expression { expr, .. } => {
                if expr.max_feature().is_some_and(|j| j >= d) {
                    return Err(Error::validation("expression references a missing feature"));
                }
                None
            }
        };
        match need {
            Some(k) if k != d => Err(Error::validation(format!(
                "{} scorer expects {k} features, dataset has {d}",
                self.kind_name()
            ))),
            _ => Ok(()),
        }
    }

    /// Scores a row. The caller is responsible for width compatibility.
    pub fn score(&self, row: &[T]) -> Result<T> {
        let s = self.eval(row);
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite(format!(
                "{} scorer returned {s} for {row:?}",
                self.kind_name()
            )))
        }
    }

    fn eval(&self, row: &[T]) -> T {
        match self {
            ScoringFunction::Linear { weights } => weights
                .iter()
                .zip(row)
                .fold(T::zero(), |acc, (&w, &x)| acc + w * x),
            ScoringFunction::CsRankings => {
                let prod = CSRANKINGS_EXPONENTS
                    .iter()
                    .zip(row)
                    .fold(T::one(), |acc, (&e, &x)| acc * (x.powi(e) + T::one()));
                prod.powf(T::one() / T::lit(f64::from(CSRANKINGS_ROOT)))
            }
            ScoringFunction::Atp => {
                let hundred = T::lit(100.0);
                hundred * (row[0] + row[1] + row[2] + row[3] + row[4] - row[5])
            }
            ScoringFunction::Expression { expr, .. } => expr.eval(row),
        }
    }
}

/// Free-function form of [`ScoringFunction::score`] that also checks width.
pub fn score<T: Scalar>(f: &ScoringFunction<T>, v: &[T]) -> Result<T> {
    f.check_compatible(v.len())?;
    f.score(v)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScorerConfig {
    kind: String,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    expression: Option<String>,
}

/// Parses a scorer configuration document (TOML, or JSON when the text starts
/// with `{`). Feature order is the dataset header order.
pub fn parse_scorer_config<T: Scalar>(
    doc: &str,
    feature_names: &[String],
) -> Result<ScoringFunction<T>> {
    let cfg: ScorerConfig = if doc.trim_start().starts_with('{') {
        serde_json::from_str(doc)
            .map_err(|e| Error::validation(format!("bad scorer config: {e}")))?
    } else {
        toml::from_str(doc).map_err(|e| Error::validation(format!("bad scorer config: {e}")))?
    };
    let d = feature_names.len();
    let f = match cfg.kind.as_str() {
        "linear" => {
            let w = cfg
                .weights
                .ok_or_else(|| Error::validation("linear scorer needs weights"))?;
            if w.len() != d {
                return Err(Error::validation(format!(
                    "{} weights for {d} features",
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation("weights must be finite"));
            }
            ScoringFunction::linear(&w)
        }
        "csrankings" => ScoringFunction::CsRankings,
        "atp" => ScoringFunction::Atp,
        "expression" => {
            let src = cfg
                .expression
                .ok_or_else(|| Error::validation("expression scorer needs an expression"))?;
            ScoringFunction::expression(&src, feature_names)?
        }
        other => return Err(Error::validation(format!("unknown scorer kind {other:?}"))),
    };
    f.check_compatible(d)?;
    Ok(f)
}

/// A ranking induced by a scorer: best first, ties by ascending row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking<T: Scalar = f64> {
    order: Vec<usize>,
    rank_of: Vec<usize>,
    scores: Vec<T>,
}

impl<T: Scalar> Ranking<T> {
    pub fn from_scores(scores: Vec<T>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("finite scores")
                .then(a.cmp(&b))
        });
        let mut rank_of = vec![0; scores.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank_of[i] = pos + 1;
        }
        Ranking {
            order,
            rank_of,
            scores,
        }
    }

    /// Items best first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of item `i`.
    pub fn rank_of(&self, i: usize) -> usize {
        self.rank_of[i]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank_of
    }

    pub fn score_of(&self, i: usize) -> T {
        self.scores[i]
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Number of items of the full dataset that precede a newcomer with score
    /// `s` carrying tie position `tie_index`.
    #[inline]
    pub(crate) fn count_preceding(&self, s: T, tie_index: usize) -> usize {
        self.order.partition_point(|&w| {
            let sw = self.scores[w];
            sw > s || (sw == s && w < tie_index)
        })
    }

    /// Rank of an item with score `s` that replaces item `v` (and inherits its
    /// tie position) in the dataset.
    ///
    /// With `s == score_of(v)` this is exactly `rank_of(v)`.
    #[inline]
    pub fn replacement_rank(&self, s: T, v: usize) -> usize {
        let mut count = self.count_preceding(s, v);
        if self.scores[v] > s {
            count -= 1;
        }
        count + 1
    }
}

/// Scores every item and ranks them.
pub fn rank_all<T: Scalar>(f: &ScoringFunction<T>, dataset: &Dataset<T>) -> Result<Ranking<T>> {
    f.check_compatible(dataset.d())?;
    let scores = dataset
        .rows()
        .enumerate()
        .map(|(i, row)| {
            f.score(row).map_err(|e| Error::Item {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ranking::from_scores(scores))
}

/// Rank of `u` after it replaces item `v_index` in `dataset`.
pub fn rank_of_replacement<T: Scalar>(
    dataset: &Dataset<T>,
    v_index: usize,
    u: &[T],
    f: &ScoringFunction<T>,
) -> Result<usize> {
    dataset.check_index(v_index)?;
    if u.len() != dataset.d() {
        return Err(Error::validation("replacement row has the wrong width"));
    }
    let ranking = rank_all(f, dataset)?;
    Ok(ranking.replacement_rank(f.score(u)?, v_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::admissions;

    #[test]
    fn admissions_scores_and_ranks() {
        let ds = admissions();
        let f = ScoringFunction::admissions();
        assert!((score(&f, ds.row(0)).unwrap() - 4.6).abs() < 1e-12);
        let r = rank_all(&f, &ds).unwrap();
        let names: Vec<&str> = r.order().iter().map(|&i| ds.id(i).unwrap()).collect();
        assert_eq!(names, ["Bob", "Cal", "Dia", "Eli", "Fay", "Kat", "Leo", "Osi"]);
        assert_eq!(r.rank_of(ds.resolve_item("Leo").unwrap()), 7);
    }

    #[test]
    fn csrankings_all_zero_is_one() {
        let f = ScoringFunction::<f64>::CsRankings;
        assert_eq!(score(&f, &[0.0; 4]).unwrap(), 1.0);
        assert!(score(&f, &[0.0; 3]).is_err());
    }

    #[test]
    fn zero_weights_score_zero() {
        let f = ScoringFunction::<f64>::linear(&[0.0, 0.0]);
        assert_eq!(score(&f, &[3.0, -7.5]).unwrap(), 0.0);
    }

    #[test]
    fn atp_formula() {
        let f = ScoringFunction::<f64>::Atp;
        let s = score(&f, &[0.6, 0.7, 0.5, 0.65, 8.0, 2.0]).unwrap();
        assert!((s - 100.0 * (0.6 + 0.7 + 0.5 + 0.65 + 8.0 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn non_finite_expression_is_an_error() {
        let names = vec!["a".to_string()];
        let f = ScoringFunction::<f64>::expression("1 / a", &names).unwrap();
        assert!(matches!(score(&f, &[0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn single_item_and_ties() {
        let ds = Dataset::from_rows(vec![vec![1.0]]).unwrap();
        let f = ScoringFunction::linear(&[1.0]);
        assert_eq!(rank_all(&f, &ds).unwrap().rank_of(0), 1);
        let ds = Dataset::from_rows(vec![vec![0.0], vec![2.0], vec![2.0]]).unwrap();
        let r = rank_all(&f, &ds).unwrap();
        assert_eq!(r.ranks(), &[3, 1, 2]);
    }

    #[test]
    fn replacement_rank_cases() {
        let ds = admissions();
        let f = ScoringFunction::admissions();
        let leo = ds.resolve_item("Leo").unwrap();
        assert_eq!(rank_of_replacement(&ds, leo, &[5.0, 5.0, 5.0], &f).unwrap(), 1);
        assert_eq!(rank_of_replacement(&ds, leo, ds.row(leo), &f).unwrap(), 7);
        assert_eq!(rank_of_replacement(&ds, leo, &[0.0, 0.0, 0.0], &f).unwrap(), 8);
        let r = rank_all(&f, &ds).unwrap();
        for v in 0..ds.n() {
            assert_eq!(r.replacement_rank(r.score_of(v), v), r.rank_of(v));
        }
    }

    #[test]
    fn config_documents() {
        let names: Vec<String> = ["gpa", "sat", "essay"].iter().map(|s| s.to_string()).collect();
        let f: ScoringFunction = parse_scorer_config("kind = \"linear\"\nweights = [0.4, 0.4, 0.2]", &names).unwrap();
        assert_eq!(f, ScoringFunction::admissions());
        let f: ScoringFunction =
            parse_scorer_config(r#"{"kind": "expression", "expression": "gpa * sat"}"#, &names).unwrap();
        assert_eq!(f.score(&[2.0, 3.0, 0.0]).unwrap(), 6.0);
        let err = parse_scorer_config::<f64>("kind = \"bogus\"", &names).unwrap_err();
        assert!(err.to_string().contains("unknown scorer kind"));
        assert!(parse_scorer_config::<f64>("kind = \"linear\"\nweights = [1.0]", &names).is_err());
        assert!(parse_scorer_config::<f64>("kind = \"expression\"\nexpression = \"gre + 1\"", &names).is_err());
        assert!(parse_scorer_config::<f64>("kind = \"csrankings\"", &names).is_err());
        let four: Vec<String> = ["ai", "sys", "th", "int"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            parse_scorer_config::<f64>("kind = \"csrankings\"", &four).unwrap(),
            ScoringFunction::CsRankings
        );
    }
}
