//! AWGN channel, exhaustive ML reference and Monte-Carlo error rates.

mod channel;
mod ml;
mod montecarlo;

use thiserror::Error;

pub use channel::{awgn_llr, awgn_llr_into, awgn_llr_unclipped, noise_variance, output_llr, ChannelConfig};
pub use ml::{ml_decode, MlDecoder, MlScratch, MAX_ML_DIM};
pub use montecarlo::{
    block_rng, block_sample, monte_carlo, simulate_blocks, BlockDecoder, BlockOutcome, ErrorRateEstimate, StopRule,
};

use crate::msgpass::DecodeError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("exhaustive ML decoding needs k <= {bound}, got k = {k}")]
    MlBound { k: usize, bound: usize },
    #[error("decoder block length {decoder} differs from code length {code}")]
    Length { decoder: usize, code: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
