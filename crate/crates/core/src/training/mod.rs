//! Gradient training of decoder weights and quantizer levels.

mod adam;
mod grad;
mod loss;
mod trainer;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use grad::{batch_loss, loss_and_gradients, GradientSet, CHUNK};
pub use loss::{combine_layer_losses, layer_weights, multiloss, soft_ber_loss};
pub use trainer::{
    parameters, sample_batch, set_parameters, train_until_plateau, LossRecord, StopReason, TrainConfig, TrainOutcome,
};

use crate::msgpass::{DecodeError, ParamRef};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("input length {found} does not match block length {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("gradient of parameter {index}{} is not finite", .param.map(|p| format!(" ({p})")).unwrap_or_default())]
    NonFiniteGradient { index: usize, param: Option<ParamRef> },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
