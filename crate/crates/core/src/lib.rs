//! Shapley-value feature attributions for score-based rankers.
//!
//! Explains an item's score, rank, top-k membership, or its standing relative
//! to another item, as per-feature contributions. Exact and sampled modes,
//! evaluation metrics, synthetic generators and report helpers are included.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the precision.
//!
//! ```
//! use rankshap::{explain_item, fixtures, EngineOptions, QoiKind, ScoringFunction};
//!
//! let data = fixtures::admissions();
//! let f = ScoringFunction::admissions();
//! let e = explain_item(&data, 6, QoiKind::Rank, &f, &EngineOptions::exact()).unwrap();
//! assert!((e.reconstruction - 7.0).abs() < 1e-9);
//! ```

pub mod aggregate;
pub mod engine;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod io;
pub mod metrics;
pub mod model;
pub mod qoi;
pub mod render;
pub mod scalar;
pub mod scoring;
pub mod synth;

pub use aggregate::{quartiles, stratify_aggregate, strata_bounds, StratumSummary};
pub use engine::{
    all_pairs, draw_samples, enumerate_coalitions, explain_all, explain_item, explain_items,
    explain_pair, explain_pairs, sample_pairs, CoalitionWeight, EngineOptions, SampleCount, SamplingMode,
};
pub use error::{Error, ErrorClass, Result};
pub use io::{read_explanations, write_explanations, DatasetFingerprint, ExplanationDocument};
pub use metrics::{
    fidelity, method_agreement, method_fidelity, normalizer, sensitivity, similarity,
    NeighborKind, NeighborSpec, SensitivityTriple, SimilarityKind,
};
pub use model::{
    compose_hybrid, validate_dataset, Coalition, Dataset, ExplanationVector, FeatureRow, QoiKind,
    Subject,
};
pub use qoi::PayoffContext;
pub use scalar::Scalar;
pub use scoring::{parse_scorer_config, rank_all, rank_of_replacement, score, Ranking, ScoringFunction};
pub use synth::{builtin_spec, generate_synthetic, Distribution, SyntheticSpec};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FeatureRow64 = FeatureRow<f64>;
pub type FeatureRow32 = FeatureRow<f32>;
pub type ScoringFunction64 = ScoringFunction<f64>;
pub type ScoringFunction32 = ScoringFunction<f32>;
pub type Ranking64 = Ranking<f64>;
pub type Ranking32 = Ranking<f32>;
pub type Explanation64 = ExplanationVector<f64>;
pub type Explanation32 = ExplanationVector<f32>;
