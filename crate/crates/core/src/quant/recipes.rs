use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::LinearCode;
use crate::msgpass::{DecodeError, Decoder};
use crate::quant::{baseline_post_training, BitWidths, PostTrainingMode, QuantizationPlan};
use crate::scalar::Real;
use crate::training::{sample_batch, train_until_plateau, TrainConfig, TrainError, TrainOutcome};

/// Message range covered by freshly initialized uniform quantizers.
pub const DEFAULT_MESSAGE_CLIP: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QuantMode {
    /// Trainable levels, trained together with weights and offsets.
    Joint,
    /// Fixed uniform levels, weights and offsets retrained.
    Qat,
    /// Fixed uniform levels, no retraining.
    PostUniform { clip: f64 },
    /// Fixed levels fitted to calibration decodes, no retraining.
    PostLloyd { calibration_batches: usize },
}

/// Attaches quantizers to a float decoder per `mode`, retraining for the
/// joint and quantization-aware modes.
pub fn quantize_decoder<T: Real>(
    decoder: &Decoder<T>,
    code: &LinearCode,
    bits: BitWidths,
    mode: QuantMode,
    tcfg: &TrainConfig,
) -> Result<(Decoder<T>, Option<TrainOutcome<T>>), TrainError> {
    let clip = T::lit(DEFAULT_MESSAGE_CLIP);
    let mut float = decoder.clone();
    float.set_quantization(None)?;
    match mode {
        QuantMode::Joint | QuantMode::Qat => {
            let plan = QuantizationPlan::uniform(bits, clip, float.weights(), mode == QuantMode::Joint)
                .map_err(DecodeError::from)?;
            float.set_quantization(Some(plan))?;
            let out = train_until_plateau(&float, code, tcfg)?;
            Ok((out.decoder.clone(), Some(out)))
        }
        QuantMode::PostUniform { clip } => {
            Ok((baseline_post_training(&float, bits, PostTrainingMode::Uniform { clip }, &[])?, None))
        }
        QuantMode::PostLloyd { calibration_batches } => {
            let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed ^ 0x5eed_ca1b);
            let mut inputs = Vec::new();
            for _ in 0..calibration_batches.max(1) {
                inputs.extend(sample_batch::<T>(code, tcfg, &mut rng));
            }
            Ok((baseline_post_training(&float, bits, PostTrainingMode::LloydMax, &inputs)?, None))
        }
    }
}
