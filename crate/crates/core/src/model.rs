//! Self-contained JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeDescriptor, CodeError, LinearCode};
use crate::msgpass::{DecodeError, Decoder, IterationPlan, Variant, WeightSet};
use crate::quant::QuantizationPlan;
use crate::scalar::Real;

pub const FORMAT_VERSION: u32 = 1;

/// Where a model came from. All fields are free-form and optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Provenance {
    pub kind: Option<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub loss_history_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct ModelFile<T: Real> {
    pub format_version: u32,
    pub code: CodeDescriptor,
    pub plan: IterationPlan,
    pub weights: WeightSet<T>,
    pub variant: Variant,
    #[serde(default)]
    pub quantization: Option<QuantizationPlan<T>>,
    #[serde(default)]
    pub early_stopping: bool,
    #[serde(default)]
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("model is for a length-{model} code, decoder has length {decoder}")]
    Length { model: usize, decoder: usize },
    #[error("cannot read or write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl<T: Real> ModelFile<T> {
    pub fn new(code: &LinearCode, decoder: &Decoder<T>, provenance: Provenance) -> Result<Self, ModelError> {
        if code.n() != decoder.n() {
            return Err(ModelError::Length {
                model: code.n(),
                decoder: decoder.n(),
            });
        }
        Ok(ModelFile {
            format_version: FORMAT_VERSION,
            code: CodeDescriptor::from_code(code),
            plan: decoder.plan().clone(),
            weights: decoder.weights().clone(),
            variant: decoder.variant(),
            quantization: decoder.quantization().cloned(),
            early_stopping: decoder.early_stopping().is_some(),
            provenance,
        })
    }

    /// Rebuilds the code and the decoder.
    pub fn build(&self) -> Result<(LinearCode, Decoder<T>), ModelError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::Version(self.format_version));
        }
        let code = self.code.to_code()?;
        if code.n() != self.plan.n_cols() {
            return Err(ModelError::Length {
                model: code.n(),
                decoder: self.plan.n_cols(),
            });
        }
        let mut d = Decoder::new(self.plan.clone(), self.weights.clone(), self.variant)?;
        if let Some(q) = &self.quantization {
            d.set_quantization(Some(q.clone()))?;
        }
        if self.early_stopping {
            d = d.with_early_stopping(code.h_std().clone())?;
        }
        Ok((code, d))
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != FORMAT_VERSION {
            return Err(ModelError::Version(m.format_version));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let p = path.as_ref();
        fs::write(p, self.to_json()?).map_err(|source| ModelError::Io {
            path: p.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let p = path.as_ref();
        let s = fs::read_to_string(p).map_err(|source| ModelError::Io {
            path: p.display().to_string(),
            source,
        })?;
        Self::from_json(&s)
    }
}
