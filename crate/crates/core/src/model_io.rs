//! Versioned JSON document for a fitted encoder and its head.
//!
//! Matrices are stored as `{"rows", "cols", "data"}` where `data` is the
//! standard base64 encoding of the row-major entries as little-endian IEEE-754
//! `f64`, so values round-trip bit for bit.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{InvarianceMetric, ResolvedKernels};
use crate::data::Preprocessor;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::rff::RffProjection;
use crate::solver::{EncoderModel, KernelContext};
use crate::tradeoff::{LinearHead, Task};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "kirl-encoder";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: String,
}

impl MatrixDoc {
    pub fn encode(m: &DMatrix<f64>) -> Self {
        let mut bytes = Vec::with_capacity(m.len() * 8);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: STANDARD.encode(bytes),
        }
    }

    pub fn encode_vector(v: &DVector<f64>) -> Self {
        Self::encode(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn decode(&self) -> Result<DMatrix<f64>> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::Format(format!("matrix data: {e}")))?;
        if bytes.len() != self.rows * self.cols * 8 {
            return Err(Error::Format(format!(
                "matrix data holds {} bytes, expected {} for {}x{}",
                bytes.len(),
                self.rows * self.cols * 8,
                self.rows,
                self.cols
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &values))
    }

    pub fn decode_vector(&self) -> Result<DVector<f64>> {
        if self.cols != 1 && self.rows * self.cols != 0 {
            return Err(Error::Format("expected a column vector".into()));
        }
        let m = self.decode()?;
        Ok(DVector::from_column_slice(m.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpecDoc {
    pub family: KernelFamily,
    pub bandwidth: f64,
    pub input_dim: usize,
}

impl KernelSpecDoc {
    pub fn from_spec(s: &KernelSpec<f64>) -> Self {
        Self {
            family: s.family,
            bandwidth: s.bandwidth,
            input_dim: s.input_dim,
        }
    }

    pub fn to_spec(&self) -> Result<KernelSpec<f64>> {
        match self.family {
            KernelFamily::RbfGaussian => KernelSpec::rbf(self.bandwidth, self.input_dim),
            KernelFamily::Linear => KernelSpec::linear(self.input_dim),
            KernelFamily::OneHotDelta => Ok(KernelSpec::one_hot_delta()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum KernelContextDoc {
    Exact {
        spec: KernelSpecDoc,
        train_points: MatrixDoc,
    },
    Rff {
        weights: MatrixDoc,
        phases: MatrixDoc,
        bandwidth: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadDoc {
    pub task: Task,
    pub weights: MatrixDoc,
    pub bias: MatrixDoc,
}

/// Everything `eval` needs to reproduce the sweep metrics on new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub lambda: f64,
    pub gamma: f64,
    pub r: usize,
    pub n_train: usize,
    pub objective: f64,
    pub eigenvalues: MatrixDoc,
    pub theta: MatrixDoc,
    pub kernel: KernelContextDoc,
    pub kernel_y: KernelSpecDoc,
    pub kernel_s: KernelSpecDoc,
    pub pivot_tol: f64,
    pub kcc_reg: f64,
    pub invariance: InvarianceMetric,
    pub head: HeadDoc,
    pub preprocessor: Preprocessor,
    /// Class labels of a categorical target, in code order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_labels: Option<Vec<String>>,
}

/// Non-matrix context saved next to a model.
#[derive(Debug, Clone)]
pub struct ModelContext<'a> {
    pub config_digest: &'a str,
    pub kernels: &'a ResolvedKernels,
    pub pivot_tol: f64,
    pub kcc_reg: f64,
    pub invariance: InvarianceMetric,
    pub preprocessor: &'a Preprocessor,
    pub y_labels: Option<Vec<String>>,
    pub s_labels: Option<Vec<String>>,
}

impl ModelDocument {
    pub fn new(model: &EncoderModel<f64>, head: &LinearHead, ctx: &ModelContext<'_>) -> Self {
        let kernel = match model.kernel_ctx() {
            KernelContext::Exact { spec, train_points } => KernelContextDoc::Exact {
                spec: KernelSpecDoc::from_spec(spec),
                train_points: MatrixDoc::encode(train_points),
            },
            KernelContext::Rff { projection } => KernelContextDoc::Rff {
                weights: MatrixDoc::encode(&projection.weights),
                phases: MatrixDoc::encode_vector(&projection.phases),
                bandwidth: projection.bandwidth,
                seed: projection.seed,
            },
        };
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config_digest: ctx.config_digest.into(),
            lambda: model.lambda(),
            gamma: model.gamma(),
            r: model.r(),
            n_train: model.n_train(),
            objective: model.objective(),
            eigenvalues: MatrixDoc::encode_vector(model.eigenvalues()),
            theta: MatrixDoc::encode(model.theta()),
            kernel,
            kernel_y: KernelSpecDoc::from_spec(&ctx.kernels.y),
            kernel_s: KernelSpecDoc::from_spec(&ctx.kernels.s),
            pivot_tol: ctx.pivot_tol,
            kcc_reg: ctx.kcc_reg,
            invariance: ctx.invariance,
            head: HeadDoc {
                task: head.task,
                weights: MatrixDoc::encode(&head.weights),
                bias: MatrixDoc::encode_vector(&head.bias),
            },
            preprocessor: ctx.preprocessor.clone(),
            y_labels: ctx.y_labels.clone(),
            s_labels: ctx.s_labels.clone(),
        }
    }

    pub fn encoder(&self) -> Result<EncoderModel<f64>> {
        let kernel_ctx = match &self.kernel {
            KernelContextDoc::Exact { spec, train_points } => KernelContext::Exact {
                spec: spec.to_spec()?,
                train_points: train_points.decode()?,
            },
            KernelContextDoc::Rff {
                weights,
                phases,
                bandwidth,
                seed,
            } => KernelContext::Rff {
                projection: RffProjection {
                    weights: weights.decode()?,
                    phases: phases.decode_vector()?,
                    bandwidth: *bandwidth,
                    seed: *seed,
                },
            },
        };
        let theta = self.theta.decode()?;
        if theta.nrows() != self.r {
            return Err(Error::Format(format!("theta has {} rows but r = {}", theta.nrows(), self.r)));
        }
        EncoderModel::from_parts(
            theta,
            kernel_ctx,
            self.lambda,
            self.gamma,
            self.eigenvalues.decode_vector()?,
            self.objective,
            self.n_train,
        )
    }

    pub fn head(&self) -> Result<LinearHead> {
        Ok(LinearHead {
            task: self.head.task,
            weights: self.head.weights.decode()?,
            bias: self.head.bias.decode_vector()?,
        })
    }

    pub fn kernels(&self) -> Result<(KernelSpec<f64>, KernelSpec<f64>)> {
        Ok((self.kernel_y.to_spec()?, self.kernel_s.to_spec()?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ModelDocument = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::Format(format!("model document at `{}`: {}", e.path(), e.inner()))
        })?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Format(format!("unknown model format `{}`", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", doc.version)));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
