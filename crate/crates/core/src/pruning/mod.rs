//! Check-node pruning with retraining, baseline strategies and the final
//! decoder variants.

mod finalize;
mod prune;
mod select;

use thiserror::Error;

pub use finalize::{complexity, count_parameters, finalize_decoder, Complexity, DecoderKind};
pub use prune::{
    apply_prune, initial_decoder, probe_bler, prune_loop, BlerProbe, Family, GroupSchedule, PruneConfig, PruneEnd,
    PruneOutcome, PruneRecord, PruneStop, Strategy,
};
pub use select::{select_candidates, select_max_weight, select_random};

use crate::msgpass::DecodeError;
use crate::simulation::SimError;
use crate::training::TrainError;

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("weight-based selection needs one weight per check (tied mode)")]
    NeedsTiedWeights,
    #[error("invalid pruning configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
