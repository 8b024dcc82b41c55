//! Message passing over the unrolled Tanner graph: BP, neural BP, min-sum and
//! (neural) offset min-sum, with per-iteration parity-check matrices.

mod decoder;
pub(crate) mod engine;
mod node;
mod plan;
mod weights;

use thiserror::Error;

pub use decoder::{decode, hard_decision, DecodeTrace, Decoder, Variant};
pub use engine::Workspace;
pub use node::{
    cn_update_exact, cn_update_minsum, cn_update_noms, cn_update_oms, marginalize, product_limit, vn_update,
    EMPTY_MIN,
};
pub use plan::{IterationPlan, LayerGraph, NO_EDGE};
pub use weights::{CnMode, Layout, OffsetMode, ParamRef, Shape, WeightSet};

use crate::quant::QuantError;

/// Magnitude limit applied to every LLR and message.
pub const M_CLIP: f64 = 18.0;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("an iteration plan needs at least one iteration")]
    EmptyPlan,
    #[error("the first iteration must keep at least one active check")]
    NoActiveFirstLayer,
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("check {check} of iteration {layer} is already pruned")]
    AlreadyPruned { layer: usize, check: usize },
    #[error("iteration {layer} has no check {check}")]
    UnknownCheck { layer: usize, check: usize },
    #[error("incompatible decoder parts: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Quant(#[from] QuantError),
}
