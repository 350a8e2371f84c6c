//! Brute-force Shapley oracle, written without any of the engine's
//! machinery: coalition values are computed by direct enumeration over
//! bitmasks and weighted with factorials, and ranks are counted naively.

#![allow(dead_code)]

use rankshap::{explain_item, explain_pair, Dataset, EngineOptions, QoiKind, ScoringFunction};

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub struct Oracle<'a> {
    rows: Vec<Vec<f64>>,
    scorer: &'a ScoringFunction,
    scores: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(ds: &Dataset, scorer: &'a ScoringFunction) -> Self {
        let rows: Vec<Vec<f64>> = ds.rows().map(<[f64]>::to_vec).collect();
        let scores = rows.iter().map(|r| scorer.score(r).unwrap()).collect();
        Oracle { rows, scorer, scores }
    }

    fn base_rank(&self, i: usize) -> usize {
        1 + (0..self.rows.len())
            .filter(|&j| {
                self.scores[j] > self.scores[i] || (self.scores[j] == self.scores[i] && j < i)
            })
            .count()
    }

    /// Rank of row `h` standing in for item `v`. With a partner `u`, a tie
    /// against `u` is resolved so that `u` stays ahead exactly when it was
    /// behind `v` (or, for tied scores, when its index is smaller).
    fn rank(&self, h: &[f64], v: usize, partner: Option<usize>) -> usize {
        let s = self.scorer.score(h).unwrap();
        let mut ahead = 0;
        for j in 0..self.rows.len() {
            if j == v {
                continue;
            }
            let sj = self.scores[j];
            let j_first = if sj != s {
                sj > s
            } else if Some(j) == partner {
                if self.scores[j] == self.scores[v] {
                    j < v
                } else {
                    self.base_rank(v) < self.base_rank(j)
                }
            } else {
                j < v
            };
            if j_first {
                ahead += 1;
            }
        }
        ahead + 1
    }

    fn payoff(&self, h: &[f64], v: usize, partner: Option<usize>, qoi: QoiKind) -> f64 {
        match qoi.item_kind() {
            QoiKind::Score => self.scorer.score(h).unwrap(),
            QoiKind::Rank => self.rank(h, v, partner) as f64,
            QoiKind::TopK(k) => f64::from(u8::from(self.rank(h, v, partner) <= k)),
            _ => unreachable!(),
        }
    }

    /// Shapley values of the game whose players are features and whose value
    /// of `mask` is `value(mask)`.
    fn shapley(d: usize, value: impl Fn(usize) -> f64) -> Vec<f64> {
        let vals: Vec<f64> = (0..1usize << d).map(value).collect();
        (0..d)
            .map(|i| {
                (0..1usize << d)
                    .filter(|m| m & (1 << i) == 0)
                    .map(|m| {
                        let s = m.count_ones() as usize;
                        let w = factorial(s) * factorial(d - s - 1) / factorial(d);
                        w * (vals[m | (1 << i)] - vals[m])
                    })
                    .sum()
            })
            .collect()
    }

    /// Players are the features kept at `v`'s values; the rest come from a
    /// uniformly chosen other item.
    pub fn item(&self, v: usize, qoi: QoiKind) -> Vec<f64> {
        let d = self.rows[0].len();
        let others: Vec<usize> = (0..self.rows.len()).filter(|&j| j != v).collect();
        Self::shapley(d, |mask| {
            let total: f64 = others
                .iter()
                .map(|&u| {
                    let h: Vec<f64> = (0..d)
                        .map(|j| if mask & (1 << j) != 0 { self.rows[v][j] } else { self.rows[u][j] })
                        .collect();
                    self.payoff(&h, v, None, qoi)
                })
                .sum();
            total / others.len() as f64
        })
    }

    /// Players are the features switched from `v` to `u`.
    pub fn pair(&self, v: usize, u: usize, qoi: QoiKind) -> Vec<f64> {
        let d = self.rows[0].len();
        Self::shapley(d, |mask| {
            let h: Vec<f64> = (0..d)
                .map(|j| if mask & (1 << j) != 0 { self.rows[u][j] } else { self.rows[v][j] })
                .collect();
            self.payoff(&h, v, Some(u), qoi)
        })
    }
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest deviation between engine and oracle over every item, every pair
/// and every QoI kind (top-k for each k).
pub fn worst_case(ds: &Dataset, f: &ScoringFunction) -> f64 {
    let oracle = Oracle::new(ds, f);
    let opts = EngineOptions::exact();
    let n = ds.n();
    let mut kinds = vec![QoiKind::Score, QoiKind::Rank];
    kinds.extend((1..=n).map(QoiKind::TopK));
    let mut worst: f64 = 0.0;
    for &q in &kinds {
        let pq = match q {
            QoiKind::Score => QoiKind::PairwiseScore,
            QoiKind::Rank => QoiKind::PairwiseRank,
            QoiKind::TopK(k) => QoiKind::PairwiseTopK(k),
            _ => unreachable!(),
        };
        for v in 0..n {
            let e = explain_item(ds, v, q, f, &opts).unwrap();
            worst = worst.max(max_gap(&e.contributions, &oracle.item(v, q)));
            for u in (0..n).filter(|&u| u != v) {
                let e = explain_pair(ds, v, u, pq, f, &opts).unwrap();
                worst = worst.max(max_gap(&e.contributions, &oracle.pair(v, u, pq)));
            }
        }
    }
    worst
}

