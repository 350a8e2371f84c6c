//! Quantities of interest evaluated on hybrid items.
//!
//! Every payoff here is "the outcome the explained item `v` would get if its
//! feature row were replaced by `u`": its score, its rank in
//! `D \ {v} ∪ {u}`, or whether that rank is within the top-k.

use crate::error::{Error, Result};
use crate::model::{compose_hybrid, Coalition, Dataset, QoiKind};
use crate::scalar::Scalar;
use crate::scoring::{Ranking, ScoringFunction};

/// Fixed arguments of a payoff function.
#[derive(Debug, Clone)]
pub struct PayoffContext<'a, T: Scalar = f64> {
    dataset: &'a Dataset<T>,
    scorer: &'a ScoringFunction<T>,
    ranking: &'a Ranking<T>,
    qoi: QoiKind,
    v_index: usize,
    partner: Option<Partner<T>>,
}

/// Pairwise tie handling against the partner item `u`.
///
/// A hybrid that ties `u` is ordered on the opposite side of `u` from where
/// `v` sits in the base ranking, so that the fully switched hybrid lands
/// exactly on `u`'s rank. When `u` and `v` themselves tie, the plain row-index
/// rule applies.
#[derive(Debug, Clone, Copy)]
struct Partner<T> {
    index: usize,
    score: T,
    /// `u` precedes a hybrid with equal score.
    wins_tie: bool,
}

impl<'a, T: Scalar> PayoffContext<'a, T> {
    pub fn new(
        dataset: &'a Dataset<T>,
        scorer: &'a ScoringFunction<T>,
        ranking: &'a Ranking<T>,
        qoi: QoiKind,
        v_index: usize,
    ) -> Result<Self> {
        dataset.check_index(v_index)?;
        qoi.validate(dataset.n())?;
        if ranking.len() != dataset.n() {
            return Err(Error::validation("ranking does not match dataset"));
        }
        Ok(PayoffContext {
            dataset,
            scorer,
            ranking,
            qoi,
            v_index,
            partner: None,
        })
    }

    /// Context for a pairwise kind, switching `v`'s features toward `u`.
    pub fn pairwise(
        dataset: &'a Dataset<T>,
        scorer: &'a ScoringFunction<T>,
        ranking: &'a Ranking<T>,
        qoi: QoiKind,
        v_index: usize,
        u_index: usize,
    ) -> Result<Self> {
        if !qoi.is_pairwise() {
            return Err(Error::validation(format!("{qoi} is not a pairwise qoi")));
        }
        dataset.check_index(u_index)?;
        if u_index == v_index {
            return Err(Error::validation("a pair needs two distinct items"));
        }
        let mut ctx = Self::new(dataset, scorer, ranking, qoi, v_index)?;
        let su = ranking.score_of(u_index);
        let sv = ranking.score_of(v_index);
        let wins_tie = if su == sv {
            u_index < v_index
        } else {
            ranking.rank_of(v_index) < ranking.rank_of(u_index)
        };
        ctx.partner = Some(Partner {
            index: u_index,
            score: su,
            wins_tie,
        });
        Ok(ctx)
    }

    pub fn qoi(&self) -> QoiKind {
        self.qoi
    }

    pub fn v_index(&self) -> usize {
        self.v_index
    }

    pub fn dataset(&self) -> &'a Dataset<T> {
        self.dataset
    }

    pub fn scorer(&self) -> &'a ScoringFunction<T> {
        self.scorer
    }

    pub fn ranking(&self) -> &'a Ranking<T> {
        self.ranking
    }

    /// Rank of a replacement with score `s`, including the pairwise tie rule.
    #[inline]
    pub fn replacement_rank(&self, s: T) -> usize {
        let v = self.v_index;
        let mut rank = self.ranking.replacement_rank(s, v);
        if let Some(p) = self.partner {
            if s == p.score {
                let counted = p.index < v;
                rank = rank - usize::from(counted) + usize::from(p.wins_tie);
            }
        }
        rank
    }

    /// Payoff of a replacement whose score is already known.
    #[inline]
    pub fn payoff_from_score(&self, s: T) -> T {
        match self.qoi.item_kind() {
            QoiKind::Score => s,
            QoiKind::Rank => T::count(self.replacement_rank(s)),
            QoiKind::TopK(k) => {
                if self.replacement_rank(s) <= k {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ => unreachable!("item_kind is never pairwise"),
        }
    }

    /// Payoff of `v` replaced by the row `u`.
    pub fn payoff_one(&self, u: &[T]) -> Result<T> {
        if u.len() != self.dataset.d() {
            return Err(Error::validation("row has the wrong width"));
        }
        Ok(self.payoff_from_score(self.scorer.score(u)?))
    }

    /// Mean paired payoff difference between two equally sized samples.
    ///
    /// Sign per kind: score `f(u1) − f(u2)`, rank `rank(u2) − rank(u1)`,
    /// top-k `+1` when only `u1` is in the top-k and `−1` when only `u2` is.
    pub fn iota(&self, u1: &[Vec<T>], u2: &[Vec<T>]) -> Result<T> {
        if u1.len() != u2.len() {
            return Err(Error::validation("samples differ in length"));
        }
        if u1.is_empty() {
            return Err(Error::validation("empty sample"));
        }
        let mut acc = T::zero();
        for (a, b) in u1.iter().zip(u2) {
            let pa = self.payoff_one(a)?;
            let pb = self.payoff_one(b)?;
            acc += match self.qoi.item_kind() {
                QoiKind::Rank => pb - pa,
                _ => pa - pb,
            };
        }
        Ok(acc / T::count(u1.len()))
    }

    /// Payoff of the single hybrid that takes coalition `s` from `u` and the
    /// remaining features from `v`.
    pub fn payoff_pair(&self, v: &[T], u: &[T], s: &Coalition) -> Result<T> {
        if !self.qoi.is_pairwise() {
            return Err(Error::validation(format!("{} is not a pairwise qoi", self.qoi)));
        }
        self.payoff_one(&compose_hybrid(v, u, s)?)
    }
}
