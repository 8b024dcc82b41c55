use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::msgpass::{DecodeError, IterationPlan};
use crate::scalar::Real;

/// How CN-side weights are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnMode {
    /// No CN weights (all ones).
    Unit,
    /// One weight per check and iteration.
    Tied,
    /// One weight per edge and iteration.
    Untied,
}

/// How offsets of the min-sum family are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    None,
    PerCheck,
    PerEdge,
}

/// Sizes of a plan as seen by a weight set: `(checks, edges)` per iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub n: usize,
    pub layers: Vec<(usize, usize)>,
}

impl Shape {
    pub fn of(plan: &IterationPlan) -> Self {
        Shape {
            n: plan.n_cols(),
            layers: (0..plan.l_max()).map(|l| (plan.n_active(l), plan.n_edges(l))).collect(),
        }
    }

    pub fn l_max(&self) -> usize {
        self.layers.len()
    }
}

/// Offsets of every parameter block inside the flat value vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    ch: Vec<Range<usize>>,
    vc: Vec<Range<usize>>,
    cn: Vec<Range<usize>>,
    beta: Vec<Range<usize>>,
    len: usize,
}

impl Layout {
    fn new(shape: &Shape, vn: bool, cn_mode: CnMode, offsets: OffsetMode) -> Self {
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let l_max = shape.l_max();
        let ch = (0..=l_max).map(|_| take(if vn { shape.n } else { 0 })).collect();
        let mut vc = Vec::with_capacity(l_max);
        let mut cn = Vec::with_capacity(l_max);
        let mut beta = Vec::with_capacity(l_max);
        for &(checks, edges) in &shape.layers {
            vc.push(take(if vn { edges } else { 0 }));
            cn.push(take(match cn_mode {
                CnMode::Unit => 0,
                CnMode::Tied => checks,
                CnMode::Untied => edges,
            }));
            beta.push(take(match offsets {
                OffsetMode::None => 0,
                OffsetMode::PerCheck => checks,
                OffsetMode::PerEdge => edges,
            }));
        }
        Layout {
            ch,
            vc,
            cn,
            beta,
            len: at,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ch(&self, k: usize) -> Range<usize> {
        self.ch[k].clone()
    }

    pub fn vc(&self, l: usize) -> Range<usize> {
        self.vc[l].clone()
    }

    pub fn cn(&self, l: usize) -> Range<usize> {
        self.cn[l].clone()
    }

    pub fn beta(&self, l: usize) -> Range<usize> {
        self.beta[l].clone()
    }

    /// Names the parameter stored at flat index `i`.
    pub fn locate(&self, i: usize) -> Option<ParamRef> {
        let find = |blocks: &[Range<usize>]| blocks.iter().position(|r| r.contains(&i)).map(|b| (b, i - blocks[b].start));
        if let Some((k, v)) = find(&self.ch) {
            return Some(ParamRef::Channel { k, var: v });
        }
        if let Some((layer, edge)) = find(&self.vc) {
            return Some(ParamRef::VarToCheck { layer, edge });
        }
        if let Some((layer, index)) = find(&self.cn) {
            return Some(ParamRef::Check { layer, index });
        }
        find(&self.beta).map(|(layer, index)| ParamRef::Offset { layer, index })
    }
}

/// A trainable scalar identified by block and position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRef {
    Channel { k: usize, var: usize },
    VarToCheck { layer: usize, edge: usize },
    /// Tied: `index` is the check position in the layer; untied: the edge.
    Check { layer: usize, index: usize },
    Offset { layer: usize, index: usize },
}

impl std::fmt::Display for ParamRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamRef::Channel { k, var } => write!(f, "w_ch[{k}][{var}]"),
            ParamRef::VarToCheck { layer, edge } => write!(f, "w_vc[{layer}][{edge}]"),
            ParamRef::Check { layer, index } => write!(f, "w_c[{layer}][{index}]"),
            ParamRef::Offset { layer, index } => write!(f, "beta[{layer}][{index}]"),
        }
    }
}

/// All trainable scalars of a decoder, stored flat.
///
/// There are `l_max + 1` channel-weight vectors: vector `k` scales the channel
/// term of VN layer `k` and of the a-posteriori sum after iteration `k - 1`,
/// so the final marginalization has its own channel weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr<T>", into = "WeightRepr<T>", bound = "T: Real")]
pub struct WeightSet<T: Real> {
    vn: bool,
    cn_mode: CnMode,
    offsets: OffsetMode,
    shape: Shape,
    layout: Layout,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
struct WeightRepr<T: Real> {
    vn: bool,
    cn_mode: CnMode,
    offsets: OffsetMode,
    shape: Shape,
    values: Vec<T>,
}

impl<T: Real> TryFrom<WeightRepr<T>> for WeightSet<T> {
    type Error = DecodeError;
    fn try_from(r: WeightRepr<T>) -> Result<Self, DecodeError> {
        let mut w = WeightSet::with_shape(r.shape, r.vn, r.cn_mode, r.offsets, T::zero());
        if r.values.len() != w.values.len() {
            return Err(DecodeError::DimensionMismatch {
                what: "weight values",
                expected: w.values.len(),
                found: r.values.len(),
            });
        }
        w.values = r.values;
        Ok(w)
    }
}

impl<T: Real> From<WeightSet<T>> for WeightRepr<T> {
    fn from(w: WeightSet<T>) -> Self {
        WeightRepr {
            vn: w.vn,
            cn_mode: w.cn_mode,
            offsets: w.offsets,
            shape: w.shape,
            values: w.values,
        }
    }
}

impl<T: Real> WeightSet<T> {
    fn with_shape(shape: Shape, vn: bool, cn_mode: CnMode, offsets: OffsetMode, beta0: T) -> Self {
        let layout = Layout::new(&shape, vn, cn_mode, offsets);
        let mut values = vec![T::one(); layout.len()];
        for l in 0..shape.l_max() {
            values[layout.beta(l)].fill(beta0);
        }
        WeightSet {
            vn,
            cn_mode,
            offsets,
            shape,
            layout,
            values,
        }
    }

    /// Weights initialised to one and offsets to `beta0`.
    pub fn new(plan: &IterationPlan, vn: bool, cn_mode: CnMode, offsets: OffsetMode, beta0: T) -> Self {
        Self::with_shape(Shape::of(plan), vn, cn_mode, offsets, beta0)
    }

    /// No stored parameters: plain BP / min-sum.
    pub fn unit(plan: &IterationPlan) -> Self {
        Self::new(plan, false, CnMode::Unit, OffsetMode::None, T::zero())
    }

    /// Channel, VN->CN and one weight per check, all ones.
    pub fn tied(plan: &IterationPlan) -> Self {
        Self::new(plan, true, CnMode::Tied, OffsetMode::None, T::zero())
    }

    pub fn has_vn(&self) -> bool {
        self.vn
    }

    pub fn cn_mode(&self) -> CnMode {
        self.cn_mode
    }

    pub fn offsets(&self) -> OffsetMode {
        self.offsets
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ch(&self, k: usize) -> &[T] {
        &self.values[self.layout.ch(k)]
    }

    pub fn vc(&self, l: usize) -> &[T] {
        &self.values[self.layout.vc(l)]
    }

    pub fn cn(&self, l: usize) -> &[T] {
        &self.values[self.layout.cn(l)]
    }

    pub fn beta(&self, l: usize) -> &[T] {
        &self.values[self.layout.beta(l)]
    }

    pub fn cn_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.layout.cn(l);
        &mut self.values[r]
    }

    pub fn beta_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.layout.beta(l);
        &mut self.values[r]
    }

    pub fn check_plan(&self, plan: &IterationPlan) -> Result<(), DecodeError> {
        let s = Shape::of(plan);
        if s != self.shape {
            return Err(DecodeError::Incompatible(format!(
                "weight set was built for a different plan ({} vs {} iterations, {} vs {} checks)",
                self.shape.l_max(),
                s.l_max(),
                self.shape.layers.iter().map(|x| x.0).sum::<usize>(),
                s.layers.iter().map(|x| x.0).sum::<usize>()
            )));
        }
        Ok(())
    }

    /// Copies the parameters that survive in `new`, a pruned version of `old`.
    pub fn restrict(&self, old: &IterationPlan, new: &IterationPlan) -> Result<Self, DecodeError> {
        self.check_plan(old)?;
        if !new.is_subset_of(old) {
            return Err(DecodeError::Incompatible("target plan is not a pruned copy of the source".into()));
        }
        let mut out = Self::new(new, self.vn, self.cn_mode, self.offsets, T::zero());
        for k in 0..=old.l_max() {
            let (src, dst) = (self.layout.ch(k), out.layout.ch(k));
            out.values[dst].copy_from_slice(&self.values[src]);
        }
        let rows = old.pool().row_weights();
        for l in 0..old.l_max() {
            let mut dst_check = 0;
            let mut dst_edge = 0;
            let mut src_edge = 0;
            for (src_check, c) in old.active_checks(l).into_iter().enumerate() {
                let deg = rows[c];
                if new.is_active(l, c) {
                    let copy = |out: &mut Self, a: Range<usize>, b: Range<usize>, per_edge: bool| {
                        let (s, d, len) = if per_edge {
                            (a.start + src_edge, b.start + dst_edge, deg)
                        } else {
                            (a.start + src_check, b.start + dst_check, 1)
                        };
                        if !a.is_empty() {
                            out.values[d..d + len].copy_from_slice(&self.values[s..s + len]);
                        }
                    };
                    let r = out.layout.vc(l);
                    copy(&mut out, self.layout.vc(l), r, true);
                    let r = out.layout.cn(l);
                    copy(&mut out, self.layout.cn(l), r, self.cn_mode == CnMode::Untied);
                    let r = out.layout.beta(l);
                    copy(&mut out, self.layout.beta(l), r, self.offsets == OffsetMode::PerEdge);
                    dst_check += 1;
                    dst_edge += deg;
                }
                src_edge += deg;
            }
        }
        Ok(out)
    }

    /// Per-edge CN weights, each edge starting from its check's tied weight.
    pub fn untie(&self, plan: &IterationPlan) -> Result<Self, DecodeError> {
        self.check_plan(plan)?;
        let mut out = Self::new(plan, self.vn, CnMode::Untied, self.offsets, T::zero());
        let rows = plan.pool().row_weights();
        for l in 0..plan.l_max() {
            let (vs, vd) = (self.layout.vc(l), out.layout.vc(l));
            out.values[vd].copy_from_slice(&self.values[vs]);
            let (bs, bd) = (self.layout.beta(l), out.layout.beta(l));
            out.values[bd].copy_from_slice(&self.values[bs]);
            let (src, dst) = (self.layout.cn(l), out.layout.cn(l));
            let mut e = 0;
            for (i, c) in plan.active_checks(l).into_iter().enumerate() {
                for _ in 0..rows[c] {
                    out.values[dst.start + e] = match self.cn_mode {
                        CnMode::Unit => T::one(),
                        CnMode::Tied => self.values[src.start + i],
                        CnMode::Untied => self.values[src.start + e],
                    };
                    e += 1;
                }
            }
        }
        for k in 0..=plan.l_max() {
            let (s, d) = (self.layout.ch(k), out.layout.ch(k));
            out.values[d].copy_from_slice(&self.values[s]);
        }
        Ok(out)
    }

    /// Number of stored trainable scalars.
    pub fn count_parameters(&self) -> usize {
        self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::ParityCheckMatrix;

    fn plan() -> IterationPlan {
        let h = ParityCheckMatrix::new(7, vec![vec![0, 2, 4, 6], vec![1, 2, 5, 6], vec![3, 4, 5, 6]]).unwrap();
        IterationPlan::uniform(h, 2).unwrap()
    }

    #[test]
    fn tied_layout_counts() {
        let p = plan();
        let w = WeightSet::<f64>::tied(&p);
        // 3 channel vectors of 7, 12 VN->CN weights and 3 CN weights per iteration
        assert_eq!(w.count_parameters(), 3 * 7 + 2 * (12 + 3));
        assert_eq!(WeightSet::<f64>::unit(&p).count_parameters(), 0);
        let u = w.untie(&p).unwrap();
        assert_eq!(u.count_parameters(), 3 * 7 + 2 * (12 + 12));
        assert_eq!(
            w.layout().locate(21 + 12),
            Some(ParamRef::Check { layer: 0, index: 0 })
        );
    }

    #[test]
    fn restrict_keeps_surviving_values() {
        let p = plan();
        let mut w = WeightSet::<f64>::new(&p, true, CnMode::Tied, OffsetMode::PerEdge, 0.0);
        for (i, v) in w.values_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        let mut q = p.clone();
        q.deactivate(1, 1).unwrap();
        let r = w.restrict(&p, &q).unwrap();
        assert_eq!(r.cn(1), &[w.cn(1)[0], w.cn(1)[2]]);
        let mut want_vc = w.vc(1)[..4].to_vec();
        want_vc.extend_from_slice(&w.vc(1)[8..]);
        assert_eq!(r.vc(1), want_vc.as_slice());
        assert_eq!(r.beta(1).len(), 8);
        assert_eq!(r.vc(0), w.vc(0));
        assert_eq!(r.ch(2), w.ch(2));
    }

    #[test]
    fn untie_copies_check_weight_to_edges() {
        let p = plan();
        let mut w = WeightSet::<f64>::tied(&p);
        w.cn_mut(0).copy_from_slice(&[0.5, -1.0, 2.0]);
        let u = w.untie(&p).unwrap();
        assert_eq!(&u.cn(0)[..5], &[0.5, 0.5, 0.5, 0.5, -1.0]);
        assert_eq!(u.cn(1), &[1.0; 12]);
    }

    #[test]
    fn serde_round_trip() {
        let p = plan();
        let mut w = WeightSet::<f64>::tied(&p);
        w.values_mut()[3] = 0.1 + 0.2;
        let s = serde_json::to_string(&w).unwrap();
        let back: WeightSet<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
