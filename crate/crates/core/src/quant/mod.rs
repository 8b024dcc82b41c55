//! Symmetric mid-tread quantizers, their placement inside the decoder, and
//! level fitting and training recipes.

mod baseline;
mod lloyd;
mod plan;
mod recipes;
mod spec;

use thiserror::Error;

pub use baseline::{baseline_post_training, calibration_samples, CalibrationSamples, PostTrainingMode};
pub use lloyd::{distortion, lloyd_max_fit, LloydReport, LLOYD_MAX_ROUNDS, LLOYD_TOLERANCE};
pub use plan::{offset_range, weight_range, BitWidths, QuantGroup, QuantizationPlan};
pub use recipes::{quantize_decoder, QuantMode, DEFAULT_MESSAGE_CLIP};
pub use spec::{QuantizerSpec, MIN_LEVEL_GAP};

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("bit width {0} is outside 2..=16")]
    BitWidth(u32),
    #[error("invalid levels: {0}")]
    Levels(String),
    #[error("Lloyd-Max fitting needs at least {needed} samples, got {found}")]
    Samples { needed: usize, found: usize },
    #[error("quantization plan covers {plan} iterations, the decoder has {decoder}")]
    Iterations { plan: usize, decoder: usize },
}
