use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codes::ParityCheckMatrix;
use crate::msgpass::engine::{self, Workspace};
use crate::msgpass::{CnMode, DecodeError, IterationPlan, LayerGraph, OffsetMode, WeightSet};
use crate::quant::{QuantGroup, QuantError, QuantizationPlan};
use crate::scalar::{sigmoid, Real};

/// Check-node rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `2 atanh(prod tanh(mu / 2))`.
    Exact,
    MinSum,
    /// Offset min-sum, one offset per check.
    Oms,
    /// Offset min-sum, one offset per edge.
    Noms,
}

impl Variant {
    pub fn is_min_sum(self) -> bool {
        !matches!(self, Variant::Exact)
    }

    fn accepts(self, offsets: OffsetMode) -> bool {
        matches!(
            (self, offsets),
            (_, OffsetMode::None) | (Variant::Oms, OffsetMode::PerCheck) | (Variant::Noms, OffsetMode::PerEdge)
        )
    }
}

/// Output of one decode.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace<T> {
    /// A-posteriori LLRs after each executed iteration.
    pub mu_post: Vec<Vec<T>>,
    /// `sigmoid(-mu_post)`: probability that each bit is one.
    pub o: Vec<Vec<T>>,
    pub hard: Vec<u8>,
    pub cn_evals: usize,
}

/// A decoder: plan, weights, CN rule and optional quantizers.
///
/// The quantized copies of the weights are cached; call the setters rather
/// than mutating the pieces separately.
#[derive(Debug, Clone)]
pub struct Decoder<T: Real> {
    plan: IterationPlan,
    graphs: Arc<Vec<LayerGraph>>,
    weights: WeightSet<T>,
    variant: Variant,
    quant: Option<QuantizationPlan<T>>,
    effective: Vec<T>,
    early_stop: Option<Arc<ParityCheckMatrix>>,
}

impl<T: Real> Decoder<T> {
    pub fn new(plan: IterationPlan, weights: WeightSet<T>, variant: Variant) -> Result<Self, DecodeError> {
        weights.check_plan(&plan)?;
        if !variant.accepts(weights.offsets()) {
            return Err(DecodeError::Incompatible(format!(
                "{variant:?} cannot use {:?} offsets",
                weights.offsets()
            )));
        }
        let graphs = Arc::new(plan.compile());
        let mut d = Decoder {
            plan,
            graphs,
            effective: Vec::new(),
            weights,
            variant,
            quant: None,
            early_stop: None,
        };
        d.refresh();
        Ok(d)
    }

    /// Plain BP (or min-sum) over `plan`.
    pub fn unit(plan: IterationPlan, variant: Variant) -> Result<Self, DecodeError> {
        let w = WeightSet::unit(&plan);
        Self::new(plan, w, variant)
    }

    pub fn with_quantization(mut self, q: QuantizationPlan<T>) -> Result<Self, DecodeError> {
        self.set_quantization(Some(q))?;
        Ok(self)
    }

    /// Stops once the hard decision satisfies every row of `h`.
    pub fn with_early_stopping(mut self, h: ParityCheckMatrix) -> Result<Self, DecodeError> {
        if h.n_cols() != self.n() {
            return Err(DecodeError::DimensionMismatch {
                what: "early-stopping matrix columns",
                expected: self.n(),
                found: h.n_cols(),
            });
        }
        self.early_stop = Some(Arc::new(h));
        Ok(self)
    }

    pub fn without_early_stopping(mut self) -> Self {
        self.early_stop = None;
        self
    }

    pub fn n(&self) -> usize {
        self.plan.n_cols()
    }

    pub fn l_max(&self) -> usize {
        self.plan.l_max()
    }

    pub fn plan(&self) -> &IterationPlan {
        &self.plan
    }

    pub fn graphs(&self) -> &[LayerGraph] {
        &self.graphs
    }

    pub fn weights(&self) -> &WeightSet<T> {
        &self.weights
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn quantization(&self) -> Option<&QuantizationPlan<T>> {
        self.quant.as_ref()
    }

    pub fn early_stopping(&self) -> Option<&ParityCheckMatrix> {
        self.early_stop.as_deref()
    }

    /// Weights after their quantizers (the raw weights when unquantized).
    pub fn effective_weights(&self) -> &[T] {
        &self.effective
    }

    /// Check-node evaluations of a full decode.
    pub fn cn_evals(&self) -> usize {
        self.plan.total_active()
    }

    pub fn set_weight_values(&mut self, values: &[T]) {
        self.weights.values_mut().copy_from_slice(values);
        self.refresh();
    }

    pub fn replace_weights(&mut self, weights: WeightSet<T>) -> Result<(), DecodeError> {
        weights.check_plan(&self.plan)?;
        if !self.variant.accepts(weights.offsets()) {
            return Err(DecodeError::Incompatible("offset layout does not match the variant".into()));
        }
        self.weights = weights;
        self.refresh();
        Ok(())
    }

    /// Swaps in a pruned plan together with its weights.
    pub fn replace_plan(&mut self, plan: IterationPlan, weights: WeightSet<T>) -> Result<(), DecodeError> {
        weights.check_plan(&plan)?;
        self.graphs = Arc::new(plan.compile());
        self.plan = plan;
        self.weights = weights;
        self.refresh();
        Ok(())
    }

    pub fn set_quantization(&mut self, q: Option<QuantizationPlan<T>>) -> Result<(), DecodeError> {
        if let Some(q) = &q {
            if q.l_max() != self.l_max() {
                return Err(DecodeError::Quant(QuantError::Iterations {
                    plan: q.l_max(),
                    decoder: self.l_max(),
                }));
            }
        }
        self.quant = q;
        self.refresh();
        Ok(())
    }

    pub fn set_free_levels(&mut self, flat: &[T]) {
        if let Some(q) = &mut self.quant {
            q.set_free_levels(flat);
        }
        self.refresh();
    }

    pub fn set_variant(&mut self, variant: Variant) -> Result<(), DecodeError> {
        if !variant.accepts(self.weights.offsets()) {
            return Err(DecodeError::Incompatible("offset layout does not match the variant".into()));
        }
        self.variant = variant;
        Ok(())
    }

    fn refresh(&mut self) {
        let mut eff = self.weights.values().to_vec();
        if let Some(q) = &self.quant {
            let layout = self.weights.layout().clone();
            let l_max = self.l_max();
            for k in 0..=l_max {
                let spec = &q.group(QuantGroup::W)[k];
                let mut blocks = vec![layout.ch(k)];
                if k < l_max {
                    blocks.push(layout.vc(k));
                    blocks.push(layout.cn(k));
                }
                for r in blocks {
                    for x in &mut eff[r] {
                        *x = spec.quantize(*x);
                    }
                }
            }
            for l in 0..l_max {
                let spec = &q.group(QuantGroup::Beta)[l];
                for x in &mut eff[layout.beta(l)] {
                    *x = spec.quantize(*x);
                }
            }
        }
        self.effective = eff;
    }

    /// Quantizer spec and level-gradient offset for each weight parameter.
    pub(crate) fn weight_quantizer_of(&self, l_max: usize) -> Vec<(QuantGroup, usize, std::ops::Range<usize>)> {
        let layout = self.weights.layout();
        let mut out = Vec::new();
        for k in 0..=l_max {
            out.push((QuantGroup::W, k, layout.ch(k)));
            if k < l_max {
                out.push((QuantGroup::W, k, layout.vc(k)));
                out.push((QuantGroup::W, k, layout.cn(k)));
                out.push((QuantGroup::Beta, k, layout.beta(k)));
            }
        }
        out
    }

    /// Adds the level gradients of the weight and offset quantizers implied by
    /// `grad_weights` (gradients with respect to the quantized weights).
    pub fn accumulate_weight_level_grads(&self, grad_weights: &[T], grad_levels: &mut [T]) {
        let Some(q) = &self.quant else { return };
        let values = self.weights.values();
        for (g, idx, range) in self.weight_quantizer_of(self.l_max()) {
            let spec = &q.group(g)[idx];
            let off = q.level_offset(g, idx);
            for i in range {
                let bin = spec.level_index(values[i]);
                if bin > 0 {
                    grad_levels[off + bin - 1] += grad_weights[i] * crate::scalar::sign(values[i]);
                }
            }
        }
    }

    fn check_input(&self, mu_ch: &[T]) -> Result<(), DecodeError> {
        if mu_ch.len() != self.n() {
            return Err(DecodeError::DimensionMismatch {
                what: "channel LLRs",
                expected: self.n(),
                found: mu_ch.len(),
            });
        }
        Ok(())
    }

    pub fn workspace(&self) -> Workspace<T> {
        Workspace::new(self)
    }

    /// Full trace of one decode.
    pub fn decode(&self, mu_ch: &[T]) -> Result<DecodeTrace<T>, DecodeError> {
        self.check_input(mu_ch)?;
        let mut ws = Workspace::new(self);
        let run = engine::forward(self, &mut ws, mu_ch, self.early_stop.as_deref());
        let mu_post: Vec<Vec<T>> = ws.posteriors()[..run].to_vec();
        let o = mu_post.iter().map(|l| l.iter().map(|&x| sigmoid(-x)).collect()).collect();
        let hard = mu_post.last().map(|l| hard_decision(l)).unwrap_or_default();
        let cn_evals = (0..run).map(|l| self.graphs[l].n_checks()).sum();
        Ok(DecodeTrace {
            mu_post,
            o,
            hard,
            cn_evals,
        })
    }

    /// Hard decisions only, reusing `ws`. Returns the number of iterations run.
    pub fn decode_hard_into(&self, mu_ch: &[T], ws: &mut Workspace<T>, out: &mut [u8]) -> Result<usize, DecodeError> {
        self.check_input(mu_ch)?;
        ws.ensure(self);
        let run = engine::forward(self, ws, mu_ch, self.early_stop.as_deref());
        for (b, &x) in out.iter_mut().zip(&ws.posteriors()[run - 1]) {
            *b = u8::from(x < T::zero());
        }
        Ok(run)
    }

    /// Whether the weights are all stored as ones (no multiplications needed).
    pub fn is_unit(&self) -> bool {
        !self.weights.has_vn() && self.weights.cn_mode() == CnMode::Unit
    }
}

/// Bit `v` is one iff its LLR is negative; zero decides for 0.
pub fn hard_decision<T: Real>(llr: &[T]) -> Vec<u8> {
    llr.iter().map(|&x| u8::from(x < T::zero())).collect()
}

/// Stand-alone form of [`Decoder::decode`].
pub fn decode<T: Real>(
    plan: &IterationPlan,
    weights: &WeightSet<T>,
    variant: Variant,
    mu_ch: &[T],
    quant: Option<&QuantizationPlan<T>>,
) -> Result<DecodeTrace<T>, DecodeError> {
    let mut d = Decoder::new(plan.clone(), weights.clone(), variant)?;
    if let Some(q) = quant {
        d.set_quantization(Some(q.clone()))?;
    }
    d.decode(mu_ch)
}
