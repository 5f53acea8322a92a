//! Run and kernel configuration (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, ScalePolicy, SplitSpec};
use crate::kernels::{median_bandwidth, KernelFamily, KernelSpec, DEFAULT_PIVOT_TOL};
use crate::solver::LAMBDA_MAX;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthRule {
    Median,
}

/// `"median"` or a fixed positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Rule(BandwidthRule),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Rule(BandwidthRule::Median)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelChoice {
    /// Defaults to rbf-gaussian for continuous data and one-hot-delta for
    /// categorical data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<KernelFamily>,
    pub bandwidth: Bandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffConfig {
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub x: KernelChoice,
    pub y: KernelChoice,
    pub s: KernelChoice,
    /// Random features for `k_X`; exact kernel when absent.
    pub rff: Option<RffConfig>,
    pub pivot_tol: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            x: KernelChoice::default(),
            y: KernelChoice::default(),
            s: KernelChoice::default(),
            rff: None,
            pivot_tol: DEFAULT_PIVOT_TOL,
        }
    }
}

/// Concrete kernels for the three variables of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedKernels {
    pub x: KernelSpec<f64>,
    pub y: KernelSpec<f64>,
    pub s: KernelSpec<f64>,
}

fn resolve_one(choice: &KernelChoice, points: &nalgebra::DMatrix<f64>, categorical: bool, field: &str) -> Result<KernelSpec<f64>> {
    let family = choice.family.unwrap_or(if categorical {
        KernelFamily::OneHotDelta
    } else {
        KernelFamily::RbfGaussian
    });
    match family {
        KernelFamily::OneHotDelta => {
            if !categorical {
                return Err(Error::Config {
                    path: format!("kernel.{field}.family"),
                    reason: "one-hot-delta requires a categorical variable".into(),
                });
            }
            Ok(KernelSpec::one_hot_delta())
        }
        KernelFamily::Linear => KernelSpec::linear(points.ncols()),
        KernelFamily::RbfGaussian => {
            let bw = match choice.bandwidth {
                Bandwidth::Fixed(v) => v,
                Bandwidth::Rule(BandwidthRule::Median) => median_bandwidth(points)?,
            };
            KernelSpec::rbf(bw, points.ncols())
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, choice) in [("x", &self.x), ("y", &self.y), ("s", &self.s)] {
            if let Bandwidth::Fixed(v) = choice.bandwidth {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::Config {
                        path: format!("kernel.{field}.bandwidth"),
                        reason: "must be positive".into(),
                    });
                }
            }
        }
        if self.x.family == Some(KernelFamily::OneHotDelta) {
            return Err(Error::Config {
                path: "kernel.x.family".into(),
                reason: "inputs are one-hot encoded; use linear or rbf-gaussian".into(),
            });
        }
        if let Some(rff) = &self.rff {
            if rff.dim == 0 {
                return Err(Error::Config {
                    path: "kernel.rff.dim".into(),
                    reason: "must be positive".into(),
                });
            }
            if matches!(self.x.family, Some(f) if f != KernelFamily::RbfGaussian) {
                return Err(Error::Config {
                    path: "kernel.rff".into(),
                    reason: "random features require the rbf-gaussian kernel for x".into(),
                });
            }
        }
        if !(self.pivot_tol > 0.0 && self.pivot_tol < 1.0) {
            return Err(Error::Config {
                path: "kernel.pivot_tol".into(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        Ok(())
    }

    /// Picks families and bandwidths (median rule on `dataset`).
    pub fn resolve(&self, dataset: &Dataset) -> Result<ResolvedKernels> {
        self.validate()?;
        let y_cat = dataset.y.is_categorical();
        let s_cat = dataset.s.is_categorical();
        Ok(ResolvedKernels {
            x: resolve_one(&self.x, &dataset.x, false, "x")?,
            y: resolve_one(&self.y, &dataset.y.kernel_points(), y_cat, "y")?,
            s: resolve_one(&self.s, &dataset.s.kernel_points(), s_cat, "s")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum DatasetSource {
    Toy { n: usize, seed: u64 },
    Csv { path: PathBuf, schema: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    LogComplement,
    /// Linear points plus `1 − 10^{-k}` for `k = 2..=6`.
    #[default]
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaGrid {
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            count: 70,
            spacing: Spacing::Refined,
        }
    }
}

impl LambdaGrid {
    /// Sorted, strictly increasing values in `[0, 1 − 1e-6]`.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config {
                path: "lambda_grid.count".into(),
                reason: "must be positive".into(),
            });
        }
        let linear = |count: usize| -> Vec<f64> {
            if count == 1 {
                vec![0.0]
            } else {
                (0..count).map(|i| LAMBDA_MAX * i as f64 / (count - 1) as f64).collect()
            }
        };
        let mut v = match self.spacing {
            Spacing::Linear => linear(self.count),
            Spacing::LogComplement => {
                if self.count == 1 {
                    vec![0.0]
                } else {
                    // 1 − 10^{-k} for k evenly spaced in [0, 6].
                    (0..self.count)
                        .map(|i| 1.0 - 10f64.powf(-6.0 * i as f64 / (self.count - 1) as f64))
                        .collect()
                }
            }
            Spacing::Refined => {
                let mut v = linear(self.count);
                v.extend((2..=6).map(|k| 1.0 - 10f64.powi(-k)));
                v
            }
        };
        for x in v.iter_mut() {
            *x = x.clamp(0.0, LAMBDA_MAX);
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvarianceMetric {
    /// DPV for a categorical attribute with a classification target, KCC otherwise.
    #[default]
    Auto,
    Kcc,
    Dpv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl std::fmt::Display for SplitName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub preprocess: ScalePolicy,
    #[serde(default)]
    pub kernel: KernelConfig,
    /// Candidate γ values; with more than one, γ is chosen per λ by validation utility.
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    #[serde(default = "default_head_ridge")]
    pub head_ridge: f64,
    #[serde(default)]
    pub invariance: InvarianceMetric,
    #[serde(default = "default_kcc_reg")]
    pub kcc_reg: f64,
    #[serde(default = "default_splits")]
    pub splits: Vec<SplitName>,
    #[serde(default = "default_true")]
    pub save_models: bool,
    pub output_dir: PathBuf,
}

fn default_head_ridge() -> f64 {
    crate::tradeoff::DEFAULT_HEAD_RIDGE
}

fn default_kcc_reg() -> f64 {
    crate::dependence::DEFAULT_KCC_REG
}

fn default_splits() -> Vec<SplitName> {
    vec![SplitName::Test]
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSource::Csv { path, schema } = &mut cfg.dataset {
            rebase(path);
            rebase(schema);
        }
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |path: &str, reason: &str| Error::Config {
            path: path.into(),
            reason: reason.into(),
        };
        if let DatasetSource::Toy { n, .. } = self.dataset {
            if n < 3 {
                return Err(err("dataset.n", "must be at least 3"));
            }
        }
        self.split.validate().map_err(|e| err("split.fractions", &e.to_string()))?;
        if self.gamma.is_empty() {
            return Err(err("gamma", "at least one value is required"));
        }
        for (i, &g) in self.gamma.iter().enumerate() {
            if !(g > 0.0) || !g.is_finite() {
                return Err(err(&format!("gamma[{i}]"), "must be positive"));
            }
        }
        self.kernel.validate()?;
        self.lambda_grid.values()?;
        if !(self.head_ridge >= 0.0) || !self.head_ridge.is_finite() {
            return Err(err("head_ridge", "must be non-negative"));
        }
        if !(self.kcc_reg > 0.0) || !self.kcc_reg.is_finite() {
            return Err(err("kcc_reg", "must be positive"));
        }
        if self.splits.is_empty() {
            return Err(err("splits", "at least one split is required"));
        }
        Ok(())
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Hex SHA-256 over the given byte strings, each length-prefixed.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
