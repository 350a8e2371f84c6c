//! Command-line front end: argument parsing and the command implementations.
//!
//! Every command writes its primary output to `--out` (or stdout) and is a
//! pure function of its flags, apart from the timings reported by `bench`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankshap::aggregate::strata_csv;
use rankshap::engine::{all_pairs, sample_pairs};
use rankshap::io::ExplanationDocument;
use rankshap::render::{pairwise_bars_csv, waterfall_svg};
use rankshap::{
    builtin_spec, explain_item, explain_items, explain_pair, explain_pairs, generate_synthetic,
    method_agreement, method_fidelity, parse_scorer_config, rank_all, sensitivity,
    stratify_aggregate, Dataset, EngineOptions, ErrorClass, ExplanationVector, NeighborKind,
    NeighborSpec, QoiKind, SampleCount, SamplingMode, ScoringFunction, SimilarityKind,
    SyntheticSpec,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rankshap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 validation, 2 I/O, 3 computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Io => 2,
                ErrorClass::Computation => 3,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "rankshap", version, about = "Shapley-value explanations for score-based rankings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain one item, or one ordered pair for pairwise QoIs.
    Explain(ExplainArgs),
    /// Explain every item (or a set of ordered pairs for pairwise QoIs).
    ExplainAll(ExplainAllArgs),
    /// Summarize rank-QoI style explanations per ranking stratum.
    Aggregate(AggregateArgs),
    /// Fidelity, agreement and sensitivity of explanation documents.
    Metrics(MetricsArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Time sampled configurations against exact computation.
    Bench(BenchArgs),
    /// Render a record of an explanation document.
    Render(RenderArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Treat the first CSV column as item ids.
    #[arg(long)]
    pub ids: bool,
    /// Scorer configuration (TOML or JSON).
    #[arg(long, conflicts_with = "weights")]
    pub scorer: Option<PathBuf>,
    /// Linear scorer weights, comma separated, in header order.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Args, Clone)]
pub struct QoiArgs {
    #[arg(long, value_enum)]
    pub qoi: QoiName,
    /// Top-k size: an item count or a percentage of n, e.g. `10%`.
    #[arg(long)]
    pub k: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QoiName {
    Score,
    Rank,
    Topk,
    PairwiseScore,
    PairwiseRank,
    PairwiseTopk,
}

#[derive(Debug, Args, Clone)]
pub struct EngineArgs {
    /// Samples per coalition, or `exact` for every other item.
    #[arg(long, default_value = "exact")]
    pub samples: String,
    /// Largest coalition size (default: unbounded).
    #[arg(long)]
    pub max_coalition: Option<usize>,
    #[arg(long, value_enum, default_value = "row-joint")]
    pub sampling: SamplingName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingName {
    RowJoint,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum DisplaySign {
    /// Contributions sum to outcome minus baseline.
    #[default]
    Efficiency,
    /// Rank contributions negated so that helpful features are positive.
    Presentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderKind {
    Waterfall,
    Bars,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub qoi: QoiArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Item to explain: id, or row index.
    #[arg(long)]
    pub item: String,
    /// Partner item for pairwise QoIs.
    #[arg(long)]
    pub pair: Option<String>,
    /// Explanation document path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub render: Option<RenderKind>,
    /// Path of the rendered output (default: `--out` with an svg/csv extension).
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
    /// Sign used for rendered output. Waterfalls keep outcome units and only
    /// recolour: in presentation mode red marks helpful arrows.
    #[arg(long, value_enum, default_value = "efficiency")]
    pub display_sign: DisplaySign,
}

#[derive(Debug, Args)]
pub struct ExplainAllArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub qoi: QoiArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// For pairwise QoIs: explain this many ordered pairs drawn with `--seed`
    /// instead of all of them.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Explanation document of every item; computed in-line when absent.
    #[arg(long)]
    pub expl: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub qoi: Option<QoiName>,
    #[arg(long)]
    pub k: Option<String>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value_t = 10)]
    pub strata: usize,
    /// Strata CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Box statistics as a JSON plot-data document.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "efficiency")]
    pub display_sign: DisplaySign,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Explanation documents; agreement is reported for every pair of them.
    #[arg(long, required = true)]
    pub expl: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "feature-knn")]
    pub nbr: NeighborName,
    #[arg(long, default_value_t = 10)]
    pub nbr_count: usize,
    /// JSON report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sensitivity scatter CSV for the first document.
    #[arg(long)]
    pub plot_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeighborName {
    FeatureKnn,
    RankWindow,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// D1..D5, G3-indep, G3-neg or G3-mixed.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub builtin: Option<String>,
    /// Synthetic specification (TOML or JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub qoi: QoiArgs,
    /// Sample counts to compare against exact, e.g. `20,50,100,exact`.
    #[arg(long, value_delimiter = ',', default_value = "20,50,100,exact")]
    pub sweep_samples: Vec<String>,
    /// Coalition bounds, e.g. `1,2,unbounded`.
    #[arg(long, value_delimiter = ',', default_value = "unbounded")]
    pub sweep_coalitions: Vec<String>,
    /// Number of items timed, spread evenly over the ranking (default: all).
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long, value_enum, default_value = "row-joint")]
    pub sampling: SamplingName,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub expl: PathBuf,
    /// Dataset the document was computed on; supplies feature names and ids.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub ids: bool,
    /// Record to render: item id or index (default: first record).
    #[arg(long)]
    pub item: Option<String>,
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long, value_enum, default_value = "waterfall")]
    pub kind: RenderKind,
    #[arg(long, value_enum, default_value = "efficiency")]
    pub display_sign: DisplaySign,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command, returning the
/// text destined for stdout.
pub fn run_from<I, S>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| usage(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Explain(a) => cmd_explain(a),
        Command::ExplainAll(a) => cmd_explain_all(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Render(a) => cmd_render(a),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `text` to `path`, or hands it back for stdout.
fn emit(text: String, path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn load(data: &DataArgs) -> CliResult<(Dataset, ScoringFunction)> {
    let ds = Dataset::read_csv(&data.data, data.ids)?;
    let f = match (&data.scorer, &data.weights) {
        (Some(path), _) => parse_scorer_config(&read_text(path)?, ds.feature_names())?,
        (None, Some(w)) => {
            let f = ScoringFunction::linear(w);
            f.check_compatible(ds.d())?;
            f
        }
        (None, None) => return Err(usage("one of --scorer or --weights is required")),
    };
    Ok((ds, f))
}

/// `10` or `10%` (of `n`, rounded up).
pub fn parse_k(text: &str, n: usize) -> CliResult<usize> {
    let bad = || usage(format!("--k must be a positive integer or percentage, got {text:?}"));
    let k = match text.trim().strip_suffix('%') {
        Some(p) => {
            let pct: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(pct > 0.0 && pct <= 100.0) {
                return Err(bad());
            }
            (pct / 100.0 * n as f64 - 1e-9).ceil() as usize
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if k == 0 {
        return Err(usage("k must be positive"));
    }
    if k > n {
        return Err(usage(format!("k={k} exceeds n={n}")));
    }
    Ok(k)
}

fn qoi_kind(name: QoiName, k: Option<&str>, n: usize) -> CliResult<QoiKind> {
    let needs_k = matches!(name, QoiName::Topk | QoiName::PairwiseTopk);
    let k = match (needs_k, k) {
        (true, Some(t)) => Some(parse_k(t, n)?),
        (true, None) => return Err(usage("--k is required for top-k QoIs")),
        (false, Some(_)) => return Err(usage("--k only applies to top-k QoIs")),
        (false, None) => None,
    };
    Ok(match name {
        QoiName::Score => QoiKind::Score,
        QoiName::Rank => QoiKind::Rank,
        QoiName::Topk => QoiKind::TopK(k.unwrap()),
        QoiName::PairwiseScore => QoiKind::PairwiseScore,
        QoiName::PairwiseRank => QoiKind::PairwiseRank,
        QoiName::PairwiseTopk => QoiKind::PairwiseTopK(k.unwrap()),
    })
}

fn engine_options(e: &EngineArgs) -> CliResult<EngineOptions> {
    Ok(EngineOptions {
        samples: e.samples.parse::<SampleCount>()?,
        max_coalition: e.max_coalition,
        sampling: sampling_mode(e.sampling),
        seed: e.seed,
        parallelism: e.jobs,
    })
}

fn sampling_mode(s: SamplingName) -> SamplingMode {
    match s {
        SamplingName::RowJoint => SamplingMode::RowJoint,
        SamplingName::Independent => SamplingMode::IndependentMarginal,
    }
}

/// Applies the display sign to tabular output: rank-type contributions are
/// negated in presentation mode, everything else is left as is.
fn displayed(e: &ExplanationVector, sign: DisplaySign) -> ExplanationVector {
    let rank_like = matches!(e.qoi.item_kind(), QoiKind::Rank);
    if sign == DisplaySign::Presentation && rank_like {
        e.flipped()
    } else {
        e.clone()
    }
}

fn waterfall(e: &ExplanationVector, names: &[String], title: &str, sign: DisplaySign) -> String {
    let lower_is_better = sign == DisplaySign::Presentation && matches!(e.qoi.item_kind(), QoiKind::Rank);
    waterfall_svg(e, names, title, lower_is_better)
}

fn subject_label(ds: Option<&Dataset>, i: usize) -> String {
    ds.and_then(|d| d.id(i)).map_or_else(|| format!("item {i}"), str::to_string)
}

fn cmd_explain(a: ExplainArgs) -> CliResult<String> {
    let (ds, f) = load(&a.data)?;
    let qoi = qoi_kind(a.qoi.qoi, a.qoi.k.as_deref(), ds.n())?;
    let opts = engine_options(&a.engine)?;
    let v = ds.resolve_item(&a.item)?;
    let expl = if qoi.is_pairwise() {
        let sel = a.pair.as_deref().ok_or_else(|| usage("--pair is required for pairwise QoIs"))?;
        let u = ds.resolve_item(sel)?;
        explain_pair(&ds, v, u, qoi, &f, &opts)?
    } else {
        if a.pair.is_some() {
            return Err(usage("--pair only applies to pairwise QoIs"));
        }
        explain_item(&ds, v, qoi, &f, &opts)?
    };
    let doc = ExplanationDocument::new(std::slice::from_ref(&expl), qoi, &opts.fingerprint(), Some(&ds))?;

    if let Some(kind) = a.render {
        let shown = displayed(&expl, a.display_sign);
        let (text, ext) = match kind {
            RenderKind::Waterfall => {
                let title = match expl.subject.partner() {
                    Some(u) => format!("{qoi}: {} vs {}", subject_label(Some(&ds), v), subject_label(Some(&ds), u)),
                    None => format!("{qoi}: {}", subject_label(Some(&ds), v)),
                };
                (waterfall(&expl, ds.feature_names(), &title, a.display_sign), "svg")
            }
            RenderKind::Bars => (pairwise_bars_csv(&shown, ds.feature_names()), "csv"),
        };
        let path = match (&a.plot_out, &a.out) {
            (Some(p), _) => p.clone(),
            (None, Some(out)) => out.with_extension(ext),
            (None, None) => return Err(usage("--render needs --plot-out or --out")),
        };
        emit(text, Some(&path))?;
    }
    emit(doc.to_json(), a.out.as_deref())
}

fn cmd_explain_all(a: ExplainAllArgs) -> CliResult<String> {
    let (ds, f) = load(&a.data)?;
    let qoi = qoi_kind(a.qoi.qoi, a.qoi.k.as_deref(), ds.n())?;
    let opts = engine_options(&a.engine)?;
    let expls = if qoi.is_pairwise() {
        let pairs = match a.max_pairs {
            Some(m) => sample_pairs(ds.n(), m, a.engine.seed)?,
            None => all_pairs(ds.n()),
        };
        explain_pairs(&ds, &pairs, qoi, &f, &opts)?
    } else {
        if a.max_pairs.is_some() {
            return Err(usage("--max-pairs only applies to pairwise QoIs"));
        }
        rankshap::explain_all(&ds, qoi, &f, &opts)?
    };
    let doc = ExplanationDocument::new(&expls, qoi, &opts.fingerprint(), Some(&ds))?;
    emit(doc.to_json(), a.out.as_deref())
}


fn load_document(path: &Path, ds: &Dataset) -> CliResult<ExplanationDocument> {
    let doc = ExplanationDocument::read(path)?;
    doc.check_dataset(ds)?;
    Ok(doc)
}

/// Explanations of every item in index order, or an error.
fn per_item(expls: Vec<ExplanationVector>, n: usize) -> CliResult<Vec<ExplanationVector>> {
    let complete = expls.len() == n
        && expls
            .iter()
            .enumerate()
            .all(|(i, e)| e.subject == rankshap::Subject::Item(i));
    if complete {
        Ok(expls)
    } else {
        Err(usage("the explanation document must hold one record per item, in order"))
    }
}

#[derive(Serialize)]
struct BoxPlotData<'a> {
    qoi: QoiKind,
    display_sign: &'static str,
    strata: usize,
    feature_names: &'a [String],
    boxes: Vec<BoxStats<'a>>,
}

#[derive(Serialize)]
struct BoxStats<'a> {
    stratum: usize,
    feature: &'a str,
    count: usize,
    q1: f64,
    median: f64,
    q3: f64,
    whisker_lo: f64,
    whisker_hi: f64,
}

fn sign_name(s: DisplaySign) -> &'static str {
    match s {
        DisplaySign::Efficiency => "efficiency",
        DisplaySign::Presentation => "presentation",
    }
}

fn cmd_aggregate(a: AggregateArgs) -> CliResult<String> {
    let (ds, f) = load(&a.data)?;
    let (qoi, expls) = match &a.expl {
        Some(path) => {
            if a.qoi.is_some() || a.k.is_some() {
                return Err(usage("--qoi/--k come from the document when --expl is given"));
            }
            let doc = load_document(path, &ds)?;
            (doc.qoi, doc.explanations())
        }
        None => {
            let qoi = qoi_kind(a.qoi.unwrap_or(QoiName::Rank), a.k.as_deref(), ds.n())?;
            if qoi.is_pairwise() {
                return Err(usage("aggregation needs a per-item QoI"));
            }
            (qoi, rankshap::explain_all(&ds, qoi, &f, &engine_options(&a.engine)?)?)
        }
    };
    let expls: Vec<ExplanationVector> = per_item(expls, ds.n())?
        .iter()
        .map(|e| displayed(e, a.display_sign))
        .collect();
    let ranking = rank_all(&f, &ds)?;
    let summaries = stratify_aggregate(&expls, &ranking, a.strata)?;
    if let Some(path) = &a.plot_out {
        let names = ds.feature_names();
        let data = BoxPlotData {
            qoi,
            display_sign: sign_name(a.display_sign),
            strata: a.strata,
            feature_names: names,
            boxes: summaries
                .iter()
                .map(|s| BoxStats {
                    stratum: s.stratum,
                    feature: &names[s.feature],
                    count: s.count,
                    q1: s.q1,
                    median: s.median,
                    q3: s.q3,
                    whisker_lo: s.whisker_lo,
                    whisker_hi: s.whisker_hi,
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&data).expect("plot data serializes") + "\n";
        emit(text, Some(path))?;
    }
    emit(strata_csv(&summaries, ds.feature_names()), a.out.as_deref())
}

#[derive(Serialize)]
struct MetricsReport {
    neighbors: NeighborSpec,
    documents: Vec<DocumentMetrics>,
    /// Kernel name → matrix of mean agreement between documents.
    agreement: Vec<(String, Vec<Vec<f64>>)>,
}

#[derive(Serialize)]
struct DocumentMetrics {
    path: String,
    qoi: QoiKind,
    options: String,
    records: usize,
    fidelity: f64,
    /// Kernel name → sensitivity; absent for pairwise documents.
    sensitivity: Option<Vec<(String, f64)>>,
}

fn cmd_metrics(a: MetricsArgs) -> CliResult<String> {
    let (ds, f) = load(&a.data)?;
    let ranking = rank_all(&f, &ds)?;
    let nbr = NeighborSpec {
        kind: match a.nbr {
            NeighborName::FeatureKnn => NeighborKind::FeatureKnn,
            NeighborName::RankWindow => NeighborKind::RankWindow,
        },
        count: a.nbr_count,
    };
    let mut docs = Vec::new();
    let mut batches = Vec::new();
    let mut scatter = None;
    for path in &a.expl {
        let doc = load_document(path, &ds)?;
        let expls: Vec<ExplanationVector> = doc.explanations();
        if expls.is_empty() {
            return Err(usage(format!("{} has no records", path.display())));
        }
        let fidelity = method_fidelity(&expls, &ds, doc.qoi, &f)?;
        let sens = if doc.qoi.is_pairwise() {
            None
        } else {
            let items = per_item(expls.clone(), ds.n())?;
            let mut out = Vec::new();
            for k in SimilarityKind::ALL {
                let (score, triples) = sensitivity(&ds, &items, nbr, k, &ranking)?;
                scatter.get_or_insert(triples);
                out.push((k.name().to_string(), score));
            }
            Some(out)
        };
        docs.push(DocumentMetrics {
            path: path.display().to_string(),
            qoi: doc.qoi,
            options: doc.options.clone(),
            records: expls.len(),
            fidelity,
            sensitivity: sens,
        });
        batches.push(expls);
    }
    let mut agreement = Vec::new();
    for k in SimilarityKind::ALL {
        let mut m = vec![vec![0.0; batches.len()]; batches.len()];
        for (i, g) in batches.iter().enumerate() {
            for (j, q) in batches.iter().enumerate() {
                m[i][j] = method_agreement(g, q, k)?;
            }
        }
        agreement.push((k.name().to_string(), m));
    }
    if let Some(path) = &a.plot_out {
        let triples = scatter.ok_or_else(|| usage("scatter data needs a per-item document"))?;
        let mut csv = String::from("reference,neighbor,expl_dist,rank_dist,feat_dist\n");
        for t in &triples {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                t.reference, t.neighbor, t.explanation_distance, t.rank_distance, t.feature_distance
            );
        }
        emit(csv, Some(path))?;
    }
    let report = MetricsReport {
        neighbors: nbr,
        documents: docs,
        agreement,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(text, a.out.as_deref())
}

fn cmd_synth(a: SynthArgs) -> CliResult<String> {
    let mut spec = match (&a.builtin, &a.spec) {
        (Some(name), _) => builtin_spec(name)?,
        (None, Some(path)) => SyntheticSpec::parse(&read_text(path)?)?,
        (None, None) => return Err(usage("one of --builtin or --spec is required")),
    };
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let ds: Dataset = generate_synthetic(&spec)?;
    emit(ds.to_csv_string(), a.out.as_deref())
}

fn parse_bound(text: &str, d: usize) -> CliResult<Option<usize>> {
    if text.eq_ignore_ascii_case("unbounded") {
        return Ok(None);
    }
    match text.trim().parse::<usize>() {
        Ok(b) if b < d => Ok(Some(b)),
        _ => Err(usage(format!(
            "coalition bound must be \"unbounded\" or an integer in [0, {}], got {text:?}",
            d - 1
        ))),
    }
}

/// `m` items spread evenly over the ranking, in index order.
fn spread_items(ranking: &rankshap::Ranking, m: usize) -> Vec<usize> {
    let n = ranking.len();
    let mut items: Vec<usize> = (0..m).map(|j| ranking.order()[j * n / m]).collect();
    items.sort_unstable();
    items
}

fn cmd_bench(a: BenchArgs) -> CliResult<String> {
    let (ds, f) = load(&a.data)?;
    let qoi = qoi_kind(a.qoi.qoi, a.qoi.k.as_deref(), ds.n())?;
    if qoi.is_pairwise() {
        return Err(usage("bench supports per-item QoIs"));
    }
    let samples = a
        .sweep_samples
        .iter()
        .map(|s| s.parse::<SampleCount>())
        .collect::<Result<Vec<_>, _>>()?;
    let bounds = a
        .sweep_coalitions
        .iter()
        .map(|b| parse_bound(b, ds.d()))
        .collect::<CliResult<Vec<_>>>()?;
    let ranking = rank_all(&f, &ds)?;
    let items = match a.items {
        Some(0) => return Err(usage("--items must be positive")),
        Some(m) => spread_items(&ranking, m.min(ds.n())),
        None => (0..ds.n()).collect(),
    };
    let base = EngineOptions {
        samples: SampleCount::Exact,
        max_coalition: None,
        sampling: sampling_mode(a.sampling),
        seed: a.seed,
        parallelism: a.jobs,
    };
    let timed = |opts: &EngineOptions| -> CliResult<(f64, Vec<ExplanationVector>)> {
        let start = Instant::now();
        let e = explain_items(&ds, &items, qoi, &f, opts)?;
        Ok((start.elapsed().as_secs_f64() / items.len() as f64, e))
    };
    let exact_opts = EngineOptions {
        sampling: SamplingMode::RowJoint,
        ..base.clone()
    };
    let (exact_time, exact) = timed(&exact_opts)?;

    let mut csv = String::from(
        "samples,max_coalition,items,seconds_per_item,speedup,fidelity,kendall,jaccard_top2,euclid_unit\n",
    );
    for &m in &samples {
        for &b in &bounds {
            let opts = EngineOptions {
                samples: m,
                max_coalition: b,
                sampling: if m == SampleCount::Exact {
                    SamplingMode::RowJoint
                } else {
                    base.sampling
                },
                ..base.clone()
            };
            let (t, e) = if opts == exact_opts {
                (exact_time, exact.clone())
            } else {
                timed(&opts)?
            };
            let fid = method_fidelity(&e, &ds, qoi, &f)?;
            let _ = write!(
                csv,
                "{},{},{},{:.6e},{:.3},{}",
                m,
                b.map_or_else(|| "unbounded".to_string(), |b| b.to_string()),
                items.len(),
                t,
                exact_time / t,
                fid
            );
            for k in SimilarityKind::ALL {
                let _ = write!(csv, ",{}", method_agreement(&exact, &e, k)?);
            }
            csv.push('\n');
        }
    }
    emit(csv, a.out.as_deref())
}

fn cmd_render(a: RenderArgs) -> CliResult<String> {
    let doc = ExplanationDocument::read(&a.expl)?;
    let ds = match &a.data {
        Some(path) => {
            let ds = Dataset::read_csv(path, a.ids)?;
            doc.check_dataset(&ds)?;
            Some(ds)
        }
        None => None,
    };
    let resolve = |sel: &str| -> CliResult<usize> {
        match &ds {
            Some(ds) => Ok(ds.resolve_item(sel)?),
            None => sel.trim().parse().map_err(|_| usage(format!("unknown item {sel:?}"))),
        }
    };
    let item = a.item.as_deref().map(resolve).transpose()?;
    let partner = a.pair.as_deref().map(resolve).transpose()?;
    let expls: Vec<ExplanationVector> = doc.explanations();
    let expl = expls
        .iter()
        .find(|e| {
            item.is_none_or(|i| e.subject.item() == i)
                && partner.is_none_or(|u| e.subject.partner() == Some(u))
        })
        .ok_or_else(|| usage("no matching record in the document"))?;
    let names: Vec<String> = match &ds {
        Some(ds) => ds.feature_names().to_vec(),
        None => match &doc.dataset {
            Some(fp) => fp.feature_names.clone(),
            None => (1..=expl.d()).map(|j| format!("x{j}")).collect(),
        },
    };
    let shown = displayed(expl, a.display_sign);
    let text = match a.kind {
        RenderKind::Waterfall => {
            let v = expl.subject.item();
            let title = match expl.subject.partner() {
                Some(u) => format!("{}: {} vs {}", doc.qoi, subject_label(ds.as_ref(), v), subject_label(ds.as_ref(), u)),
                None => format!("{}: {}", doc.qoi, subject_label(ds.as_ref(), v)),
            };
            waterfall(expl, &names, &title, a.display_sign)
        }
        RenderKind::Bars => pairwise_bars_csv(&shown, &names),
    };
    emit(text, a.out.as_deref())
}
