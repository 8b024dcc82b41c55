use serde::{Deserialize, Serialize};

use crate::msgpass::WeightSet;
use crate::quant::{QuantError, QuantizerSpec};
use crate::scalar::Real;

/// Quantizer families, in the order their levels are flattened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantGroup {
    /// Channel LLRs, one spec per channel-weight vector (`l_max + 1`).
    Ch,
    /// VN->CN messages, one per iteration.
    Vc,
    /// CN->VN messages, one per iteration.
    Cv,
    /// Multiplicative weights; spec `k` covers `w_ch[k]`, `w_vc[k]` and the CN weights of iteration `k`.
    W,
    /// Offsets, one per iteration.
    Beta,
}

impl QuantGroup {
    pub const ALL: [QuantGroup; 5] = [QuantGroup::Ch, QuantGroup::Vc, QuantGroup::Cv, QuantGroup::W, QuantGroup::Beta];
}

/// Bit widths shared by every iteration: channel, messages, weights/offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitWidths {
    pub q_ch: u32,
    pub q_m: u32,
    pub q_w: u32,
}

impl BitWidths {
    pub fn of(&self, g: QuantGroup) -> u32 {
        match g {
            QuantGroup::Ch => self.q_ch,
            QuantGroup::Vc | QuantGroup::Cv => self.q_m,
            QuantGroup::W | QuantGroup::Beta => self.q_w,
        }
    }
}

/// Every quantizer of a decoder: untied over iterations, bit widths tied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr<T>", into = "PlanRepr<T>", bound = "T: Real")]
pub struct QuantizationPlan<T: Real> {
    bits: BitWidths,
    ch: Vec<QuantizerSpec<T>>,
    vc: Vec<QuantizerSpec<T>>,
    cv: Vec<QuantizerSpec<T>>,
    w: Vec<QuantizerSpec<T>>,
    beta: Vec<QuantizerSpec<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct PlanRepr<T: Real> {
    bits: BitWidths,
    ch: Vec<QuantizerSpec<T>>,
    vc: Vec<QuantizerSpec<T>>,
    cv: Vec<QuantizerSpec<T>>,
    w: Vec<QuantizerSpec<T>>,
    beta: Vec<QuantizerSpec<T>>,
}

impl<T: Real> TryFrom<PlanRepr<T>> for QuantizationPlan<T> {
    type Error = QuantError;
    fn try_from(r: PlanRepr<T>) -> Result<Self, QuantError> {
        let p = QuantizationPlan {
            bits: r.bits,
            ch: r.ch,
            vc: r.vc,
            cv: r.cv,
            w: r.w,
            beta: r.beta,
        };
        p.validate()?;
        Ok(p)
    }
}

impl<T: Real> From<QuantizationPlan<T>> for PlanRepr<T> {
    fn from(p: QuantizationPlan<T>) -> Self {
        PlanRepr {
            bits: p.bits,
            ch: p.ch,
            vc: p.vc,
            cv: p.cv,
            w: p.w,
            beta: p.beta,
        }
    }
}

/// Largest magnitude of weight block `k` (channel, VN->CN and CN weights).
pub fn weight_range<T: Real>(weights: &WeightSet<T>, k: usize) -> T {
    let l_max = weights.shape().l_max();
    let mut m = T::zero();
    let mut scan = |xs: &[T]| {
        for &x in xs {
            m = m.max(x.abs());
        }
    };
    scan(weights.ch(k));
    if k < l_max {
        scan(weights.vc(k));
        scan(weights.cn(k));
    }
    m
}

pub fn offset_range<T: Real>(weights: &WeightSet<T>, l: usize) -> T {
    weights.beta(l).iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

impl<T: Real> QuantizationPlan<T> {
    /// Evenly spaced levels: `[0, msg_clip]` for channel and messages, the
    /// per-iteration magnitude range of `weights` for weights and offsets.
    pub fn uniform(bits: BitWidths, msg_clip: T, weights: &WeightSet<T>, trainable: bool) -> Result<Self, QuantError> {
        let l_max = weights.shape().l_max();
        let msg = |b: u32| QuantizerSpec::uniform(b, msg_clip).map(|s| s.with_trainable(trainable));
        let mut p = QuantizationPlan {
            bits,
            ch: Vec::with_capacity(l_max + 1),
            vc: Vec::with_capacity(l_max),
            cv: Vec::with_capacity(l_max),
            w: Vec::with_capacity(l_max + 1),
            beta: Vec::with_capacity(l_max),
        };
        for k in 0..=l_max {
            p.ch.push(msg(bits.q_ch)?);
            p.w.push(QuantizerSpec::uniform(bits.q_w, weight_range(weights, k))?.with_trainable(trainable));
        }
        for l in 0..l_max {
            p.vc.push(msg(bits.q_m)?);
            p.cv.push(msg(bits.q_m)?);
            p.beta.push(QuantizerSpec::uniform(bits.q_w, offset_range(weights, l))?.with_trainable(trainable));
        }
        Ok(p)
    }

    fn validate(&self) -> Result<(), QuantError> {
        let l_max = self.vc.len();
        if l_max == 0 || self.ch.len() != l_max + 1 || self.w.len() != l_max + 1 || self.cv.len() != l_max || self.beta.len() != l_max {
            return Err(QuantError::Levels("quantizer counts do not describe a single iteration count".into()));
        }
        for g in QuantGroup::ALL {
            let want = self.bits.of(g);
            if let Some(s) = self.group(g).iter().find(|s| s.bits() != want) {
                return Err(QuantError::Levels(format!(
                    "{g:?} quantizer has {} bits, the plan ties the group to {want}",
                    s.bits()
                )));
            }
        }
        Ok(())
    }

    pub fn l_max(&self) -> usize {
        self.vc.len()
    }

    pub fn bits(&self) -> BitWidths {
        self.bits
    }

    pub fn group(&self, g: QuantGroup) -> &[QuantizerSpec<T>] {
        match g {
            QuantGroup::Ch => &self.ch,
            QuantGroup::Vc => &self.vc,
            QuantGroup::Cv => &self.cv,
            QuantGroup::W => &self.w,
            QuantGroup::Beta => &self.beta,
        }
    }

    pub fn group_mut(&mut self, g: QuantGroup) -> &mut [QuantizerSpec<T>] {
        match g {
            QuantGroup::Ch => &mut self.ch,
            QuantGroup::Vc => &mut self.vc,
            QuantGroup::Cv => &mut self.cv,
            QuantGroup::W => &mut self.w,
            QuantGroup::Beta => &mut self.beta,
        }
    }

    /// Replaces one spec, keeping the group's bit width.
    pub fn set_spec(&mut self, g: QuantGroup, index: usize, spec: QuantizerSpec<T>) -> Result<(), QuantError> {
        if spec.bits() != self.bits.of(g) {
            return Err(QuantError::BitWidth(spec.bits()));
        }
        self.group_mut(g)[index] = spec;
        Ok(())
    }

    pub fn specs(&self) -> impl Iterator<Item = &QuantizerSpec<T>> {
        QuantGroup::ALL.into_iter().flat_map(move |g| self.group(g).iter())
    }

    pub fn specs_mut(&mut self) -> impl Iterator<Item = &mut QuantizerSpec<T>> {
        self.ch
            .iter_mut()
            .chain(self.vc.iter_mut())
            .chain(self.cv.iter_mut())
            .chain(self.w.iter_mut())
            .chain(self.beta.iter_mut())
    }

    /// Start of each group in the flattened free-level vector.
    pub fn level_offset(&self, g: QuantGroup, index: usize) -> usize {
        let mut at = 0;
        for h in QuantGroup::ALL {
            if h == g {
                return at + self.group(h)[..index].iter().map(|s| s.n_free_levels()).sum::<usize>();
            }
            at += self.group(h).iter().map(|s| s.n_free_levels()).sum::<usize>();
        }
        unreachable!()
    }

    pub fn n_level_params(&self) -> usize {
        self.specs().map(|s| s.n_free_levels()).sum()
    }

    /// `q_1..q_M` of every spec, concatenated in group order.
    pub fn free_levels(&self) -> Vec<T> {
        self.specs().flat_map(|s| s.levels()[1..].iter().copied()).collect()
    }

    /// Per flattened level: whether its spec is trainable.
    pub fn trainable_mask(&self) -> Vec<bool> {
        self.specs().flat_map(|s| std::iter::repeat_n(s.trainable(), s.n_free_levels())).collect()
    }

    pub fn set_free_levels(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.n_level_params());
        let mut at = 0;
        for s in self.specs_mut() {
            let k = s.n_free_levels();
            s.set_free_levels(&flat[at..at + k]);
            at += k;
        }
    }

    pub fn set_trainable(&mut self, trainable: bool) {
        for s in self.specs_mut() {
            *s = s.clone().with_trainable(trainable);
        }
    }
}
