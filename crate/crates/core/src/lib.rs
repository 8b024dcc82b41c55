//! Neural belief propagation and neural offset min-sum decoders for short
//! linear block codes, with check-node pruning, trainable quantizers and
//! Monte-Carlo evaluation against maximum-likelihood decoding.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

pub mod codes;
pub mod gf2;
pub mod model;
pub mod msgpass;
pub mod pruning;
pub mod quant;
pub mod scalar;
pub mod simulation;
pub mod training;

pub type Decoder64 = msgpass::Decoder<f64>;
pub type Decoder32 = msgpass::Decoder<f32>;
pub type WeightSet64 = msgpass::WeightSet<f64>;
pub type WeightSet32 = msgpass::WeightSet<f32>;
pub type QuantizerSpec64 = quant::QuantizerSpec<f64>;
pub type QuantizationPlan64 = quant::QuantizationPlan<f64>;
pub type ModelFile64 = model::ModelFile<f64>;
pub type ModelFile32 = model::ModelFile<f32>;
pub type GradientSet64 = training::GradientSet<f64>;
