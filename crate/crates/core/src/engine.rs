//! Shapley engine: coalition enumeration with Shapley weights, sampling, and
//! deterministic (optionally parallel) explanation of items and pairs.
//!
//! For feature `i` and coalition `S ⊆ A \ {i}` the engine draws a sample `U`,
//! builds `U1` (features in `S` taken from `U`, the rest from `v`) and `U2`
//! (features in `S ∪ {i}` taken from `U`), and adds
//! `w(S) · mean(QoI(U1) − QoI(U2))` to `φ_i`. With this orientation the
//! contributions satisfy `QoI(v) = baseline + Σφ` for every kind, rank
//! included, so helpful features carry negative rank contributions.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compose_into, Coalition, Dataset, ExplanationVector, FeatureRow, QoiKind, Subject};
use crate::qoi::PayoffContext;
use crate::scalar::Scalar;
use crate::scoring::{rank_all, Ranking, ScoringFunction};

/// Number of samples per coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleCount {
    /// Every other item of the dataset, in dataset order.
    Exact,
    Count(usize),
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleCount::Exact => f.write_str("exact"),
            SampleCount::Count(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for SampleCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(SampleCount::Exact);
        }
        match s.trim().parse::<usize>() {
            Ok(m) if m > 0 => Ok(SampleCount::Count(m)),
            _ => Err(Error::validation(format!(
                "samples must be a positive integer or \"exact\", got {s:?}"
            ))),
        }
    }
}

/// How coalition features are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Whole rows of `D \ {v}`, projected onto the coalition.
    #[serde(rename = "row-joint")]
    RowJoint,
    /// Each feature drawn independently from its column of `D \ {v}`.
    #[serde(rename = "independent")]
    IndependentMarginal,
}

impl fmt::Display for SamplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingMode::RowJoint => "row-joint",
            SamplingMode::IndependentMarginal => "independent",
        })
    }
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-joint" => Ok(SamplingMode::RowJoint),
            "independent" | "independent-marginal" => Ok(SamplingMode::IndependentMarginal),
            other => Err(Error::validation(format!("unknown sampling mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineOptions {
    pub samples: SampleCount,
    /// Largest coalition size; `None` means unbounded (`d − 1`).
    pub max_coalition: Option<usize>,
    pub sampling: SamplingMode,
    pub seed: u64,
    /// Worker threads. Results do not depend on it.
    pub parallelism: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            samples: SampleCount::Exact,
            max_coalition: None,
            sampling: SamplingMode::RowJoint,
            seed: 0,
            parallelism: 1,
        }
    }
}

impl EngineOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sampled(m: usize, seed: u64) -> Self {
        EngineOptions {
            samples: SampleCount::Count(m),
            seed,
            ..Self::default()
        }
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn with_max_coalition(mut self, bound: usize) -> Self {
        self.max_coalition = Some(bound);
        self
    }

    pub fn with_sampling(mut self, mode: SamplingMode) -> Self {
        self.sampling = mode;
        self
    }

    pub fn coalition_bound(&self, d: usize) -> usize {
        self.max_coalition.unwrap_or(d - 1).min(d - 1)
    }

    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if self.parallelism == 0 {
            return Err(Error::validation("parallelism must be at least 1"));
        }
        if let Some(b) = self.max_coalition {
            if b + 1 > d {
                return Err(Error::validation(format!(
                    "max coalition {b} out of range [0, {}]",
                    d - 1
                )));
            }
        }
        match (self.samples, self.sampling) {
            (SampleCount::Exact, SamplingMode::IndependentMarginal) => Err(Error::validation(
                "exact computation uses row-joint sampling",
            )),
            (SampleCount::Count(0), _) => Err(Error::validation("samples must be positive")),
            (SampleCount::Count(m), SamplingMode::RowJoint) if m + 1 > n => Err(
                Error::validation(format!("{m} row-joint samples exceed the {} other items", n - 1)),
            ),
            _ => Ok(()),
        }
    }

    /// Text identifying every option that influences results.
    pub fn fingerprint(&self) -> String {
        let bound = self
            .max_coalition
            .map_or_else(|| "unbounded".to_string(), |b| b.to_string());
        format!(
            "m={};max_coalition={};sampling={};seed={}",
            self.samples, bound, self.sampling, self.seed
        )
    }
}

/// A coalition together with its Shapley weight for one feature of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionWeight<T: Scalar = f64> {
    pub coalition: Coalition,
    pub weight: T,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Every `S ⊆ A \ {i}` with `|S| ≤ max_size`, smallest first, weighted by
/// `1 / ((max_size + 1) · C(d − 1, |S|))`.
///
/// With `max_size = d − 1` this is the Shapley weight `(1/d) / C(d − 1, |S|)`;
/// smaller bounds renormalize so the weights still sum to one.
pub fn enumerate_coalitions<T: Scalar>(
    d: usize,
    i: usize,
    max_size: usize,
) -> Vec<CoalitionWeight<T>> {
    assert!(i < d && max_size < d, "coalition parameters out of range");
    let others: Vec<usize> = (0..d).filter(|&j| j != i).collect();
    let mut out = Vec::new();
    for size in 0..=max_size {
        let weight = T::lit(1.0 / ((max_size + 1) as f64 * binomial(d - 1, size)));
        let mut pick: Vec<usize> = (0..size).collect();
        loop {
            let coalition = Coalition::from_indices(pick.iter().map(|&p| others[p]), d)
                .expect("indices in range");
            out.push(CoalitionWeight { coalition, weight });
            // next combination in lexicographic order
            let mut pos = size;
            while pos > 0 && pick[pos - 1] == others.len() - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            pick[pos - 1] += 1;
            for q in pos..size {
                pick[q] = pick[q - 1] + 1;
            }
        }
    }
    out
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream for `(seed, stream_key)`.
pub fn stream_rng(seed: u64, stream_key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(fnv1a(stream_key.as_bytes()))))
}

fn coalition_key(v: usize, i: usize, s: &Coalition) -> String {
    format!("item={v}/feature={i}/coalition={s}")
}

enum SampleSet<'a, T: Scalar> {
    Rows {
        dataset: &'a Dataset<T>,
        indices: Vec<usize>,
    },
    Synthetic {
        values: Vec<T>,
        d: usize,
    },
}

impl<T: Scalar> SampleSet<'_, T> {
    fn len(&self) -> usize {
        match self {
            SampleSet::Rows { indices, .. } => indices.len(),
            SampleSet::Synthetic { values, d } => values.len() / d,
        }
    }

    fn get(&self, k: usize) -> &[T] {
        match self {
            SampleSet::Rows { dataset, indices } => dataset.row(indices[k]),
            SampleSet::Synthetic { values, d } => &values[k * d..(k + 1) * d],
        }
    }
}

fn others_in_order(n: usize, v: usize) -> Vec<usize> {
    (0..n).filter(|&j| j != v).collect()
}

fn draw_sample_set<'a, T: Scalar>(
    dataset: &'a Dataset<T>,
    v: usize,
    samples: SampleCount,
    mode: SamplingMode,
    seed: u64,
    stream_key: &str,
) -> Result<SampleSet<'a, T>> {
    let n = dataset.n();
    if n < 2 {
        return Err(Error::validation("sampling needs at least two items"));
    }
    dataset.check_index(v)?;
    let skip_v = |k: usize| if k >= v { k + 1 } else { k };
    match (samples, mode) {
        (SampleCount::Exact, SamplingMode::RowJoint) => Ok(SampleSet::Rows {
            dataset,
            indices: others_in_order(n, v),
        }),
        (SampleCount::Exact, SamplingMode::IndependentMarginal) => Err(Error::validation(
            "exact computation uses row-joint sampling",
        )),
        (SampleCount::Count(0), _) => Err(Error::validation("samples must be positive")),
        (SampleCount::Count(m), SamplingMode::RowJoint) => {
            if m > n - 1 {
                return Err(Error::validation(format!(
                    "{m} row-joint samples exceed the {} other items",
                    n - 1
                )));
            }
            let mut rng = stream_rng(seed, stream_key);
            let indices = index::sample(&mut rng, n - 1, m)
                .into_iter()
                .map(skip_v)
                .collect();
            Ok(SampleSet::Rows { dataset, indices })
        }
        (SampleCount::Count(m), SamplingMode::IndependentMarginal) => {
            let d = dataset.d();
            let mut rng = stream_rng(seed, stream_key);
            let mut values = Vec::with_capacity(m * d);
            for _ in 0..m {
                for j in 0..d {
                    let r = skip_v(rng.random_range(0..n - 1));
                    values.push(dataset.value(r, j));
                }
            }
            Ok(SampleSet::Synthetic { values, d })
        }
    }
}

/// Draws the sample rows used for one coalition.
///
/// Row-joint draws `m` rows of `D \ {v}` without replacement (`Exact`: all of
/// them in dataset order); independent-marginal synthesizes `m` rows with
/// every feature drawn uniformly from its column of `D \ {v}`. Output is a
/// pure function of `(seed, stream_key)`.
pub fn draw_samples<T: Scalar>(
    dataset: &Dataset<T>,
    v_index: usize,
    m: SampleCount,
    mode: SamplingMode,
    seed: u64,
    stream_key: &str,
) -> Result<Vec<FeatureRow<T>>> {
    let set = draw_sample_set(dataset, v_index, m, mode, seed, stream_key)?;
    Ok((0..set.len()).map(|k| FeatureRow(set.get(k).to_vec())).collect())
}

/// Coalition tables for every feature, shared across items.
fn coalition_tables<T: Scalar>(d: usize, bound: usize) -> Vec<Vec<(CoalitionWeight<T>, Vec<bool>, Vec<bool>)>> {
    (0..d)
        .map(|i| {
            enumerate_coalitions::<T>(d, i, bound)
                .into_iter()
                .map(|cw| {
                    let without = cw.coalition.mask(d);
                    let mut with = without.clone();
                    with[i] = true;
                    (cw, without, with)
                })
                .collect()
        })
        .collect()
}

type Tables<T> = [Vec<(CoalitionWeight<T>, Vec<bool>, Vec<bool>)>];

fn explain_item_in<T: Scalar>(
    ctx: &PayoffContext<'_, T>,
    opts: &EngineOptions,
    tables: &Tables<T>,
) -> Result<ExplanationVector<T>> {
    let dataset = ctx.dataset();
    let scorer = ctx.scorer();
    let v = ctx.v_index();
    let vrow = dataset.row(v);
    let d = dataset.d();

    let baseline = {
        let set = match opts.sampling {
            SamplingMode::RowJoint => SampleSet::Rows {
                dataset,
                indices: others_in_order(dataset.n(), v),
            },
            SamplingMode::IndependentMarginal => draw_sample_set(
                dataset,
                v,
                SampleCount::Count(dataset.n() - 1),
                opts.sampling,
                opts.seed,
                &format!("item={v}/baseline"),
            )?,
        };
        let mut acc = T::zero();
        for k in 0..set.len() {
            acc += ctx.payoff_from_score(scorer.score(set.get(k))?);
        }
        acc / T::count(set.len())
    };

    let exact_set = match opts.samples {
        SampleCount::Exact => Some(draw_sample_set(
            dataset,
            v,
            SampleCount::Exact,
            SamplingMode::RowJoint,
            opts.seed,
            "",
        )?),
        SampleCount::Count(_) => None,
    };

    let mut h1 = vec![T::zero(); d];
    let mut h2 = vec![T::zero(); d];
    let mut contributions = vec![T::zero(); d];
    for (i, table) in tables.iter().enumerate() {
        let mut phi = T::zero();
        for (cw, without, with) in table {
            let drawn;
            let set = match &exact_set {
                Some(set) => set,
                None => {
                    drawn = draw_sample_set(
                        dataset,
                        v,
                        opts.samples,
                        opts.sampling,
                        opts.seed,
                        &coalition_key(v, i, &cw.coalition),
                    )?;
                    &drawn
                }
            };
            let mut acc = T::zero();
            for k in 0..set.len() {
                let u = set.get(k);
                compose_into(&mut h1, vrow, u, without);
                compose_into(&mut h2, vrow, u, with);
                let p1 = ctx.payoff_from_score(scorer.score(&h1)?);
                let p2 = ctx.payoff_from_score(scorer.score(&h2)?);
                acc += p1 - p2;
            }
            phi += cw.weight * (acc / T::count(set.len()));
        }
        contributions[i] = phi;
    }
    Ok(ExplanationVector::new(
        contributions,
        ctx.qoi(),
        Subject::Item(v),
        baseline,
        opts.fingerprint(),
    ))
}

fn explain_pair_in<T: Scalar>(
    ctx: &PayoffContext<'_, T>,
    u_index: usize,
    opts: &EngineOptions,
    tables: &Tables<T>,
) -> Result<ExplanationVector<T>> {
    let dataset = ctx.dataset();
    let scorer = ctx.scorer();
    let v = ctx.v_index();
    let (vrow, urow) = (dataset.row(v), dataset.row(u_index));
    let d = dataset.d();
    let baseline = ctx.payoff_from_score(scorer.score(vrow)?);
    let mut h1 = vec![T::zero(); d];
    let mut h2 = vec![T::zero(); d];
    let mut contributions = vec![T::zero(); d];
    for (i, table) in tables.iter().enumerate() {
        let mut phi = T::zero();
        for (cw, without, with) in table {
            compose_into(&mut h1, vrow, urow, without);
            compose_into(&mut h2, vrow, urow, with);
            let p1 = ctx.payoff_from_score(scorer.score(&h1)?);
            let p2 = ctx.payoff_from_score(scorer.score(&h2)?);
            phi += cw.weight * (p2 - p1);
        }
        contributions[i] = phi;
    }
    Ok(ExplanationVector::new(
        contributions,
        ctx.qoi(),
        Subject::Pair {
            item: v,
            partner: u_index,
        },
        baseline,
        opts.fingerprint(),
    ))
}

fn prepare<T: Scalar>(
    dataset: &Dataset<T>,
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<Ranking<T>> {
    if dataset.n() < 2 {
        return Err(Error::validation("explanations need at least two items"));
    }
    qoi.validate(dataset.n())?;
    opts.validate(dataset.n(), dataset.d())?;
    rank_all(scorer, dataset)
}

fn run_indexed<R: Send>(parallelism: usize, len: usize, job: impl Fn(usize) -> R + Sync + Send) -> Result<Vec<R>> {
    if parallelism <= 1 {
        return Ok((0..len).map(job).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..len).into_par_iter().map(job).collect()))
}

fn first_failure<T>(results: Vec<Result<T>>, index_of: impl Fn(usize) -> usize) -> Result<Vec<T>> {
    results
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.map_err(|e| Error::Item {
                index: index_of(k),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Explains one item's score, rank or top-k membership.
pub fn explain_item<T: Scalar>(
    dataset: &Dataset<T>,
    v_index: usize,
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<ExplanationVector<T>> {
    if qoi.is_pairwise() {
        return Err(Error::validation(format!("{qoi} needs a pair; use explain_pair")));
    }
    let ranking = prepare(dataset, qoi, scorer, opts)?;
    let ctx = PayoffContext::new(dataset, scorer, &ranking, qoi, v_index)?;
    let tables = coalition_tables(dataset.d(), opts.coalition_bound(dataset.d()));
    explain_item_in(&ctx, opts, &tables)
}

/// Explains the difference in outcome between item `v_index` and `u_index`.
///
/// The baseline is `v`'s own payoff and the reconstruction is the payoff `v`
/// receives with all of `u`'s feature values, so for pairwise-rank on data
/// without score ties the contributions sum to `rank(u) − rank(v)`.
pub fn explain_pair<T: Scalar>(
    dataset: &Dataset<T>,
    v_index: usize,
    u_index: usize,
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<ExplanationVector<T>> {
    let ranking = prepare(dataset, qoi, scorer, opts)?;
    let ctx = PayoffContext::pairwise(dataset, scorer, &ranking, qoi, v_index, u_index)?;
    let tables = coalition_tables(dataset.d(), opts.coalition_bound(dataset.d()));
    explain_pair_in(&ctx, u_index, opts, &tables)
}

/// Explains every item, in row order. Output does not depend on
/// `opts.parallelism`.
pub fn explain_all<T: Scalar>(
    dataset: &Dataset<T>,
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<Vec<ExplanationVector<T>>> {
    explain_items(dataset, &(0..dataset.n()).collect::<Vec<_>>(), qoi, scorer, opts)
}

/// Explains the listed items, preserving their order.
pub fn explain_items<T: Scalar>(
    dataset: &Dataset<T>,
    items: &[usize],
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<Vec<ExplanationVector<T>>> {
    if qoi.is_pairwise() {
        return Err(Error::validation(format!("{qoi} needs pairs; use explain_pairs")));
    }
    let ranking = prepare(dataset, qoi, scorer, opts)?;
    let tables = coalition_tables(dataset.d(), opts.coalition_bound(dataset.d()));
    let results = run_indexed(opts.parallelism, items.len(), |k| {
        PayoffContext::new(dataset, scorer, &ranking, qoi, items[k])
            .and_then(|ctx| explain_item_in(&ctx, opts, &tables))
    })?;
    first_failure(results, |k| items[k])
}

/// Explains each `(v, u)` pair, preserving order.
pub fn explain_pairs<T: Scalar>(
    dataset: &Dataset<T>,
    pairs: &[(usize, usize)],
    qoi: QoiKind,
    scorer: &ScoringFunction<T>,
    opts: &EngineOptions,
) -> Result<Vec<ExplanationVector<T>>> {
    let ranking = prepare(dataset, qoi, scorer, opts)?;
    let tables = coalition_tables(dataset.d(), opts.coalition_bound(dataset.d()));
    let results = run_indexed(opts.parallelism, pairs.len(), |k| {
        let (v, u) = pairs[k];
        PayoffContext::pairwise(dataset, scorer, &ranking, qoi, v, u)
            .and_then(|ctx| explain_pair_in(&ctx, u, opts, &tables))
    })?;
    first_failure(results, |k| pairs[k].0)
}

/// All ordered pairs of distinct items.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|v| (0..n).filter(move |&u| u != v).map(move |u| (v, u)))
        .collect()
}

/// `m` distinct ordered pairs drawn uniformly with `seed`, in index order;
/// all pairs when `m` is at least their number.
pub fn sample_pairs(n: usize, m: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if m == 0 {
        return Err(Error::validation("pair count must be positive"));
    }
    let all = all_pairs(n);
    if m >= all.len() {
        return Ok(all);
    }
    let mut rng = stream_rng(seed, "pairs");
    let mut pick = index::sample(&mut rng, all.len(), m).into_vec();
    pick.sort_unstable();
    Ok(pick.into_iter().map(|k| all[k]).collect())
}
