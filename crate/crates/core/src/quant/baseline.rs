use crate::msgpass::{Decoder, DecodeError};
use crate::quant::{lloyd_max_fit, BitWidths, QuantError, QuantGroup, QuantizationPlan, QuantizerSpec};
use crate::scalar::Real;

/// Level placement for quantizers added after float training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostTrainingMode {
    /// Evenly spaced levels; messages over `[0, clip]`, weights over their range.
    Uniform { clip: f64 },
    /// Levels fitted to calibration samples.
    LloydMax,
}

/// Values seen by each quantizer position during calibration decodes.
#[derive(Debug, Clone, Default)]
pub struct CalibrationSamples<T> {
    pub ch: Vec<T>,
    pub vc: Vec<Vec<T>>,
    pub cv: Vec<Vec<T>>,
}

/// Runs the float decoder on `inputs` and records the clipped channel values
/// and the clipped messages of every iteration.
pub fn calibration_samples<T: Real>(decoder: &Decoder<T>, inputs: &[Vec<T>]) -> Result<CalibrationSamples<T>, DecodeError> {
    let float = {
        let mut d = decoder.clone().without_early_stopping();
        d.set_quantization(None)?;
        d
    };
    let mut ws = float.workspace();
    let mut out = CalibrationSamples {
        ch: Vec::new(),
        vc: vec![Vec::new(); float.l_max()],
        cv: vec![Vec::new(); float.l_max()],
    };
    let mut hard = vec![0u8; float.n()];
    for mu in inputs {
        float.decode_hard_into(mu, &mut ws, &mut hard)?;
        out.ch.extend_from_slice(ws.channel());
        for l in 0..float.l_max() {
            out.vc[l].extend(ws.vc_messages(l));
            out.cv[l].extend(ws.cv_messages(l));
        }
    }
    Ok(out)
}

/// Attaches fixed (non-trainable) quantizers to a trained float decoder.
pub fn baseline_post_training<T: Real>(
    decoder: &Decoder<T>,
    bits: BitWidths,
    mode: PostTrainingMode,
    calibration: &[Vec<T>],
) -> Result<Decoder<T>, DecodeError> {
    let weights = decoder.weights();
    let plan = match mode {
        PostTrainingMode::Uniform { clip } => QuantizationPlan::uniform(bits, T::lit(clip), weights, false)?,
        PostTrainingMode::LloydMax => {
            let samples = calibration_samples(decoder, calibration)?;
            let mut plan = QuantizationPlan::uniform(bits, T::lit(8.0), weights, false)?;
            let l_max = decoder.l_max();
            let fit = |xs: &[T], b: u32| -> Result<QuantizerSpec<T>, QuantError> {
                if xs.iter().all(|x| *x == T::zero()) {
                    return QuantizerSpec::uniform(b, T::zero());
                }
                lloyd_max_fit(xs, b).map(|(s, _)| s)
            };
            let ch = fit(&samples.ch, bits.q_ch)?;
            for k in 0..=l_max {
                plan.set_spec(QuantGroup::Ch, k, ch.clone())?;
            }
            for l in 0..l_max {
                plan.set_spec(QuantGroup::Vc, l, fit(&samples.vc[l], bits.q_m)?)?;
                plan.set_spec(QuantGroup::Cv, l, fit(&samples.cv[l], bits.q_m)?)?;
            }
            let layout = weights.layout();
            for k in 0..=l_max {
                let mut xs: Vec<T> = weights.ch(k).to_vec();
                if k < l_max {
                    xs.extend_from_slice(weights.vc(k));
                    xs.extend_from_slice(weights.cn(k));
                }
                if xs.len() >= 1usize << bits.q_w {
                    plan.set_spec(QuantGroup::W, k, fit(&xs, bits.q_w)?)?;
                }
                if k < l_max && layout.beta(k).len() >= 1usize << bits.q_w {
                    plan.set_spec(QuantGroup::Beta, k, fit(weights.beta(k), bits.q_w)?)?;
                }
            }
            plan
        }
    };
    let mut out = decoder.clone();
    out.set_quantization(Some(plan))?;
    Ok(out)
}
