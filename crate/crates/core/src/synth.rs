//! Synthetic dataset generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::scalar::Scalar;

/// Marginal distribution of one synthetic feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub features: Vec<Distribution>,
    /// Correlation among the gaussian features, in feature order.
    #[serde(default)]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

pub const DEFAULT_N: usize = 2000;

const BUILTINS: [&str; 8] = ["D1", "D2", "D3", "D4", "D5", "G3-indep", "G3-neg", "G3-mixed"];

impl SyntheticSpec {
    pub fn new(n: usize, features: Vec<Distribution>) -> Self {
        SyntheticSpec {
            n,
            features,
            correlation: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_correlation(mut self, correlation: Vec<Vec<f64>>) -> Self {
        self.correlation = Some(correlation);
        self
    }

    fn gaussian_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| matches!(f, Distribution::Gaussian { .. }))
            .count()
    }

    /// Parses a specification document: TOML, or JSON when it starts with `{`.
    pub fn parse(doc: &str) -> Result<Self> {
        let spec: SyntheticSpec = if doc.trim_start().starts_with('{') {
            serde_json::from_str(doc).map_err(|e| Error::validation(format!("bad synthetic spec: {e}")))?
        } else {
            toml::from_str(doc).map_err(|e| Error::validation(format!("bad synthetic spec: {e}")))?
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("synthetic n must be positive"));
        }
        if self.features.is_empty() {
            return Err(Error::validation("synthetic spec has no features"));
        }
        for (j, f) in self.features.iter().enumerate() {
            let ok = match *f {
                Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
                Distribution::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
                Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
            };
            if !ok {
                return Err(Error::validation(format!("feature x{} has invalid parameters {f:?}", j + 1)));
            }
        }
        if let Some(c) = &self.correlation {
            let g = self.gaussian_count();
            if c.len() != g || c.iter().any(|r| r.len() != g) {
                return Err(Error::validation(format!(
                    "correlation must be {g}×{g} over the gaussian features"
                )));
            }
            for a in 0..g {
                if (c[a][a] - 1.0).abs() > 1e-12 {
                    return Err(Error::validation("correlation diagonal must be 1"));
                }
                for b in 0..g {
                    if !c[a][b].is_finite() || (c[a][b] - c[b][a]).abs() > 1e-12 || c[a][b].abs() > 1.0 {
                        return Err(Error::validation("correlation must be symmetric with entries in [-1, 1]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lower-triangular `L` with `L Lᵀ = c`, tolerating semi-definite input.
pub fn cholesky(c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    const TOL: f64 = 1e-10;
    let g = c.len();
    let mut l = vec![vec![0.0; g]; g];
    for j in 0..g {
        let diag = c[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if diag < -TOL {
            return Err(Error::validation("correlation matrix is not positive semi-definite"));
        }
        let root = diag.max(0.0).sqrt();
        l[j][j] = root;
        for i in j + 1..g {
            let off = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if root > TOL {
                l[i][j] = off / root;
            } else if off.abs() > TOL {
                return Err(Error::validation("correlation matrix is not positive semi-definite"));
            }
        }
    }
    Ok(l)
}

/// Draws `spec.n` rows named `x1..xd`; identical specs give identical data.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let g = spec.gaussian_count();
    let factor = match &spec.correlation {
        Some(c) => Some(cholesky(c)?),
        None => None,
    };
    let d = spec.features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.n);
    let mut z = vec![0.0; g];
    let mut corr = vec![0.0; g];
    for _ in 0..spec.n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        match &factor {
            Some(l) => {
                for (a, out) in corr.iter_mut().enumerate() {
                    *out = (0..=a).map(|b| l[a][b] * z[b]).sum();
                }
            }
            None => corr.copy_from_slice(&z),
        }
        let mut gi = 0;
        let mut row = Vec::with_capacity(d);
        for f in &spec.features {
            let x = match *f {
                Distribution::Uniform { lo, hi } => {
                    if lo < hi {
                        rng.random_range(lo..hi)
                    } else {
                        lo
                    }
                }
                Distribution::Gaussian { mean, sd } => {
                    gi += 1;
                    mean + sd * corr[gi - 1]
                }
                Distribution::Bernoulli { p } => f64::from(u8::from(rng.random_bool(p))),
            };
            row.push(T::lit(x));
        }
        rows.push(row);
    }
    Dataset::from_rows(rows)
}

/// Named synthetic designs with `n = 2000` and seed 0.
///
/// `D1`–`D5` have two features; the `G3` family has three N(0.5, 0.1)
/// features that are independent (`G3-indep`), have corr(x1, x2) = −0.8
/// (`G3-neg`), or have corr(x1, x2) = −0.8, corr(x1, x3) = 0.6,
/// corr(x2, x3) = −0.2 (`G3-mixed`).
pub fn builtin_spec(name: &str) -> Result<SyntheticSpec> {
    use Distribution::*;
    let unit = Uniform { lo: 0.0, hi: 1.0 };
    let g = |mean, sd| Gaussian { mean, sd };
    let g3 = vec![g(0.5, 0.1); 3];
    let spec = match name {
        "D1" => SyntheticSpec::new(DEFAULT_N, vec![g(0.5, 0.1), Bernoulli { p: 0.5 }]),
        "D2" => SyntheticSpec::new(DEFAULT_N, vec![unit, g(0.5, 0.1)]),
        "D3" => SyntheticSpec::new(DEFAULT_N, vec![unit, unit]),
        "D4" => SyntheticSpec::new(DEFAULT_N, vec![g(0.5, 0.05), g(0.75, 0.016)])
            .with_correlation(vec![vec![1.0, -0.8], vec![-0.8, 1.0]]),
        "D5" => SyntheticSpec::new(DEFAULT_N, vec![g(0.5, 0.1), g(0.5, 0.05)]),
        "G3-indep" => SyntheticSpec::new(DEFAULT_N, g3),
        "G3-neg" => SyntheticSpec::new(DEFAULT_N, g3).with_correlation(vec![
            vec![1.0, -0.8, 0.0],
            vec![-0.8, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
        "G3-mixed" => SyntheticSpec::new(DEFAULT_N, g3).with_correlation(vec![
            vec![1.0, -0.8, 0.6],
            vec![-0.8, 1.0, -0.2],
            vec![0.6, -0.2, 1.0],
        ]),
        other => {
            return Err(Error::validation(format!(
                "unknown synthetic dataset {other:?} (expected one of {})",
                BUILTINS.join(", ")
            )))
        }
    };
    Ok(spec)
}

/// Names accepted by [`builtin_spec`].
pub fn builtin_names() -> &'static [&'static str] {
    &BUILTINS
}
