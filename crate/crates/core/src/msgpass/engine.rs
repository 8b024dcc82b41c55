//! Forward and reverse passes over the unrolled graph.
//!
//! Conventions shared by both passes (`l` is the 0-based iteration):
//!
//! * `Λ_{-1} = w_ch[0] · ch_q[0]` and `Λ_l = w_ch[l+1] · ch_q[l+1] + Σ_c m_l[c→v]`,
//!   summed in ascending check order.
//! * VN layer `l` sends `d = Λ_{l-1}[v] − m_{l-1}[c→v]`, where the subtraction
//!   only happens if check `c` was active in iteration `l − 1`; then
//!   `x = w_vc · d` and `x̂ = Q_vc(clip(x))`.
//! * The exact CN forms extrinsic products from prefix and suffix products,
//!   `pre[k+1] = pre[k]·t_k`, `suf[k] = t_k·suf[k+1]`, so a reference
//!   implementation using the same association reproduces it bit for bit.
//!   A degree-2 check passes the other clipped input through unchanged.
//! * CN outputs are `m = Q_cv(clip(w_c · f))`.

use crate::codes::ParityCheckMatrix;
use crate::msgpass::node::{product_limit, EMPTY_MIN};
use crate::msgpass::plan::NO_EDGE;
use crate::msgpass::{CnMode, Decoder, OffsetMode, M_CLIP};
use crate::quant::{QuantGroup, QuantizerSpec};
use crate::scalar::{clip, odd_atanh, sign, Real};

#[derive(Debug, Clone, Default)]
struct LayerState<T> {
    d: Vec<T>,
    x: Vec<T>,
    xh: Vec<T>,
    /// Exact: `tanh(x̂/2)`. Min-sum: extrinsic sign product.
    t: Vec<T>,
    /// Exact: clamped extrinsic product. Min-sum: `min_excl − β`.
    p: Vec<T>,
    /// Exact: product was clamped. Min-sum: unused.
    sat: Vec<bool>,
    /// Min-sum: edge holding the extrinsic minimum.
    arg: Vec<u32>,
    f: Vec<T>,
    y: Vec<T>,
    m: Vec<T>,
    gm: Vec<T>,
}

impl<T: Real> LayerState<T> {
    fn resize(&mut self, edges: usize) {
        for v in [
            &mut self.d,
            &mut self.x,
            &mut self.xh,
            &mut self.t,
            &mut self.p,
            &mut self.f,
            &mut self.y,
            &mut self.m,
            &mut self.gm,
        ] {
            v.resize(edges, T::zero());
        }
        self.sat.resize(edges, false);
        self.arg.resize(edges, NO_EDGE);
    }
}

/// Per-thread buffers holding every intermediate value of the last forward pass.
#[derive(Debug, Clone, Default)]
pub struct Workspace<T> {
    ch: Vec<T>,
    chq: Vec<Vec<T>>,
    base0: Vec<T>,
    lam: Vec<Vec<T>>,
    layers: Vec<LayerState<T>>,
    g_lam: Vec<T>,
    g_base: Vec<T>,
    g_xh: Vec<T>,
    scratch: Vec<T>,
    hard: Vec<u8>,
}

impl<T: Real> Workspace<T> {
    pub fn new(dec: &Decoder<T>) -> Self {
        let mut ws = Workspace::default();
        ws.ensure(dec);
        ws
    }

    /// Resizes the buffers for `dec`'s plan.
    pub fn ensure(&mut self, dec: &Decoder<T>) {
        let n = dec.n();
        let l_max = dec.l_max();
        self.ch.resize(n, T::zero());
        let n_chq = if dec.quantization().is_some() { l_max + 1 } else { 0 };
        self.chq.resize(n_chq, Vec::new());
        for c in &mut self.chq {
            c.resize(n, T::zero());
        }
        self.base0.resize(n, T::zero());
        self.lam.resize(l_max, Vec::new());
        for l in &mut self.lam {
            l.resize(n, T::zero());
        }
        self.layers.resize(l_max, LayerState::default());
        let mut max_edges = 0;
        let mut max_deg = 0;
        for (st, g) in self.layers.iter_mut().zip(dec.graphs()) {
            st.resize(g.n_edges());
            max_edges = max_edges.max(g.n_edges());
            max_deg = max_deg.max(g.cn_start.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0));
        }
        self.g_lam.resize(n, T::zero());
        self.g_base.resize(n, T::zero());
        self.g_xh.resize(max_edges, T::zero());
        self.scratch.resize(4 * (max_deg + 1), T::zero());
        self.hard.resize(n, 0);
    }

    /// `Λ_l` for every iteration of the last forward pass.
    pub fn posteriors(&self) -> &[Vec<T>] {
        &self.lam
    }

    /// Clipped channel LLRs of the last forward pass.
    pub fn channel(&self) -> &[T] {
        &self.ch
    }

    /// Clipped VN->CN messages of iteration `l` (before their quantizer).
    pub fn vc_messages(&self, l: usize) -> impl Iterator<Item = T> + '_ {
        let lim = T::lit(M_CLIP);
        self.layers[l].x.iter().map(move |&x| clip(x, lim))
    }

    /// Clipped CN->VN messages of iteration `l` (before their quantizer).
    pub fn cv_messages(&self, l: usize) -> impl Iterator<Item = T> + '_ {
        let lim = T::lit(M_CLIP);
        self.layers[l].y.iter().map(move |&y| clip(y, lim))
    }
}

#[inline]
fn q_or_id<T: Real>(spec: Option<&QuantizerSpec<T>>, x: T) -> T {
    match spec {
        Some(s) => s.quantize(x),
        None => x,
    }
}

/// Runs the unrolled decoder on one input. Returns the number of iterations
/// executed (fewer than `l_max` only when `early` is set and a codeword was found).
pub(crate) fn forward<T: Real>(dec: &Decoder<T>, ws: &mut Workspace<T>, mu_ch: &[T], early: Option<&ParityCheckMatrix>) -> usize {
    let n = dec.n();
    let l_max = dec.l_max();
    let lim = T::lit(M_CLIP);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let pmax = product_limit::<T>();
    let empty_min = T::lit(EMPTY_MIN);
    let w = dec.weights();
    let eff = dec.effective_weights();
    let layout = w.layout();
    let vn = w.has_vn();
    let cn_mode = w.cn_mode();
    let offsets = w.offsets();
    let min_sum = dec.variant().is_min_sum();
    let quant = dec.quantization();

    for (c, &m) in ws.ch.iter_mut().zip(mu_ch) {
        *c = clip(m, lim);
    }
    if let Some(q) = quant {
        for k in 0..=l_max {
            let spec = &q.group(QuantGroup::Ch)[k];
            for (o, &c) in ws.chq[k].iter_mut().zip(&ws.ch) {
                *o = spec.quantize(c);
            }
        }
    }
    {
        let chq0 = if quant.is_some() { &ws.chq[0] } else { &ws.ch };
        if vn {
            let wch = &eff[layout.ch(0)];
            for v in 0..n {
                ws.base0[v] = wch[v] * chq0[v];
            }
        } else {
            ws.base0.copy_from_slice(chq0);
        }
    }

    for l in 0..l_max {
        let g = &dec.graphs()[l];
        let (done, rest) = ws.layers.split_at_mut(l);
        let st = &mut rest[0];
        let prev_m: &[T] = done.last().map(|p| p.m.as_slice()).unwrap_or(&[]);
        let base: &[T] = if l == 0 { &ws.base0 } else { &ws.lam[l - 1] };
        let q_vc = quant.map(|q| &q.group(QuantGroup::Vc)[l]);
        let q_cv = quant.map(|q| &q.group(QuantGroup::Cv)[l]);
        let wvc = &eff[layout.vc(l)];
        let wcn = &eff[layout.cn(l)];
        let beta = &eff[layout.beta(l)];

        // VN layer
        for e in 0..g.n_edges() {
            let v = g.edge_var[e];
            let p = g.prev_edge[e];
            let d = if p == NO_EDGE { base[v] } else { base[v] - prev_m[p as usize] };
            let x = if vn { wvc[e] * d } else { d };
            st.d[e] = d;
            st.x[e] = x;
            st.xh[e] = q_or_id(q_vc, clip(x, lim));
        }

        // CN layer
        let pre = &mut ws.scratch;
        for ci in 0..g.n_checks() {
            let (a, b) = (g.cn_start[ci], g.cn_start[ci + 1]);
            let deg = b - a;
            if !min_sum {
                for k in 0..deg {
                    st.t[a + k] = (st.xh[a + k] * half).tanh();
                }
                // pre[0..=deg] then suf[deg+1..=2deg+1] in the scratch buffer
                let (pre, suf) = pre.split_at_mut(deg + 1);
                pre[0] = T::one();
                for k in 0..deg {
                    pre[k + 1] = pre[k] * st.t[a + k];
                }
                suf[deg] = T::one();
                for k in (0..deg).rev() {
                    suf[k] = st.t[a + k] * suf[k + 1];
                }
                for k in 0..deg {
                    let prod = pre[k] * suf[k + 1];
                    let sat = prod.abs() > pmax;
                    let prod = clip(prod, pmax);
                    st.p[a + k] = prod;
                    st.sat[a + k] = sat;
                    // a single extrinsic factor is the identity; skip the rounding of atanh(tanh)
                    st.f[a + k] = if deg == 2 { st.xh[a + 1 - k] } else { two * odd_atanh(prod) };
                }
            } else {
                let mut min1 = empty_min;
                let mut min2 = empty_min;
                let mut idx1 = NO_EDGE;
                let mut idx2 = NO_EDGE;
                let mut s_all = T::one();
                for e in a..b {
                    let xh = st.xh[e];
                    let mag = xh.abs();
                    s_all *= sign(xh);
                    if mag < min1 {
                        min2 = min1;
                        idx2 = idx1;
                        min1 = mag;
                        idx1 = e as u32;
                    } else if mag < min2 {
                        min2 = mag;
                        idx2 = e as u32;
                    }
                }
                for e in a..b {
                    let (mn, arg) = if e as u32 == idx1 { (min2, idx2) } else { (min1, idx1) };
                    let bt = match offsets {
                        OffsetMode::None => T::zero(),
                        OffsetMode::PerCheck => beta[ci],
                        OffsetMode::PerEdge => beta[e],
                    };
                    let s = s_all * sign(st.xh[e]);
                    let val = mn - bt;
                    st.t[e] = s;
                    st.p[e] = val;
                    st.arg[e] = arg;
                    st.f[e] = if val > T::zero() { s * val } else { T::zero() };
                }
            }
            for e in a..b {
                let y = match cn_mode {
                    CnMode::Unit => st.f[e],
                    CnMode::Tied => wcn[ci] * st.f[e],
                    CnMode::Untied => wcn[e] * st.f[e],
                };
                st.y[e] = y;
                st.m[e] = q_or_id(q_cv, clip(y, lim));
            }
        }

        // marginalization
        let lam = &mut ws.lam[l];
        let chq = if quant.is_some() { &ws.chq[l + 1] } else { &ws.ch };
        let wch = &eff[layout.ch(l + 1)];
        for v in 0..n {
            let mut acc = if vn { wch[v] * chq[v] } else { chq[v] };
            for &e in &g.var_edges[g.var_start[v]..g.var_start[v + 1]] {
                acc += st.m[e];
            }
            lam[v] = acc;
        }

        if let Some(h) = early {
            for (b, &x) in ws.hard.iter_mut().zip(lam.iter()) {
                *b = u8::from(x < T::zero());
            }
            if h.syndrome_is_zero(&ws.hard) {
                return l + 1;
            }
        }
    }
    l_max
}

/// Accumulates the gradient of `Σ_l Σ_v seed(l, v, Λ_l[v])` (the seed returns
/// `∂loss/∂Λ_l[v]`) into `g_weights` (same layout as the weight set, with
/// respect to the quantized weights) and `g_levels` (flattened message and
/// channel quantizer levels). Requires a full forward pass in `ws`.
pub(crate) fn backward<T: Real, F>(dec: &Decoder<T>, ws: &mut Workspace<T>, mut seed: F, g_weights: &mut [T], g_levels: &mut [T])
where
    F: FnMut(usize, usize, T) -> T,
{
    let n = dec.n();
    let l_max = dec.l_max();
    let lim = T::lit(M_CLIP);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let w = dec.weights();
    let eff = dec.effective_weights();
    let layout = w.layout();
    let vn = w.has_vn();
    let cn_mode = w.cn_mode();
    let offsets = w.offsets();
    let min_sum = dec.variant().is_min_sum();
    let quant = dec.quantization();

    let level_grad = |g_levels: &mut [T], group: QuantGroup, idx: usize, x: T, g: T| {
        if let Some(q) = quant {
            let bin = q.group(group)[idx].level_index(x);
            if bin > 0 {
                g_levels[q.level_offset(group, idx) + bin - 1] += g * sign(x);
            }
        }
    };

    for st in &mut ws.layers {
        st.gm.iter_mut().for_each(|g| *g = T::zero());
    }
    ws.g_base.iter_mut().for_each(|g| *g = T::zero());

    for l in (0..l_max).rev() {
        let g = &dec.graphs()[l];
        let (done, rest) = ws.layers.split_at_mut(l);
        let st = &mut rest[0];
        let prev = done.last_mut();

        // loss seed plus what VN layer l+1 sent back to Λ_l
        for v in 0..n {
            ws.g_lam[v] = seed(l, v, ws.lam[l][v]) + ws.g_base[v];
        }

        // marginalization
        let k = l + 1;
        let chq = if quant.is_some() { &ws.chq[k] } else { &ws.ch };
        let ch_off = layout.ch(k).start;
        for v in 0..n {
            let gl = ws.g_lam[v];
            let g_chq = if vn {
                g_weights[ch_off + v] += gl * chq[v];
                gl * eff[ch_off + v]
            } else {
                gl
            };
            level_grad(g_levels, QuantGroup::Ch, k, ws.ch[v], g_chq);
        }
        for e in 0..g.n_edges() {
            st.gm[e] += ws.g_lam[g.edge_var[e]];
        }

        // CN outputs: m = Q(clip(w f))
        let cn_off = layout.cn(l).start;
        for ci in 0..g.n_checks() {
            for e in g.cn_start[ci]..g.cn_start[ci + 1] {
                let y = st.y[e];
                let g_yc = st.gm[e];
                level_grad(g_levels, QuantGroup::Cv, l, clip(y, lim), g_yc);
                let g_y = if y.abs() <= lim { g_yc } else { T::zero() };
                let (widx, wv) = match cn_mode {
                    CnMode::Unit => (usize::MAX, T::one()),
                    CnMode::Tied => (cn_off + ci, eff[cn_off + ci]),
                    CnMode::Untied => (cn_off + e, eff[cn_off + e]),
                };
                if widx != usize::MAX {
                    g_weights[widx] += g_y * st.f[e];
                }
                ws.g_xh[e] = g_y * wv;
            }
        }

        // CN rule: g_xh holds g_f on entry, becomes ∂/∂x̂ on exit.
        let beta_off = layout.beta(l).start;
        for ci in 0..g.n_checks() {
            let (a, b) = (g.cn_start[ci], g.cn_start[ci + 1]);
            let deg = b - a;
            if !min_sum {
                let s = &mut ws.scratch;
                let (lp, rest) = s.split_at_mut(deg + 1);
                let (rp, rest) = rest.split_at_mut(deg + 1);
                let (ls, rs) = rest.split_at_mut(deg + 1);
                lp[0] = T::one();
                for i in 0..deg {
                    lp[i + 1] = lp[i] * st.t[a + i];
                }
                rp[deg] = T::one();
                for i in (0..deg).rev() {
                    rp[i] = st.t[a + i] * rp[i + 1];
                }
                let gp = |i: usize, gf: T| {
                    if st.sat[a + i] {
                        T::zero()
                    } else {
                        let p = st.p[a + i];
                        gf * two / (T::one() - p * p)
                    }
                };
                ls[0] = T::zero();
                for i in 0..deg {
                    ls[i + 1] = ls[i] * st.t[a + i] + gp(i, ws.g_xh[a + i]) * lp[i];
                }
                rs[deg] = T::zero();
                for i in (0..deg).rev() {
                    rs[i] = rs[i + 1] * st.t[a + i] + gp(i, ws.g_xh[a + i]) * rp[i + 1];
                }
                for i in 0..deg {
                    let t = st.t[a + i];
                    let ai = ls[i] * rp[i + 1] + lp[i] * rs[i + 1];
                    ws.g_xh[a + i] = ai * (T::one() - t * t) * half;
                }
            } else {
                // gather first: several edges may route to the same argmin
                for e in a..b {
                    let gf = ws.g_xh[e];
                    ws.scratch[e - a] = if st.p[e] > T::zero() { gf * st.t[e] } else { T::zero() };
                }
                for e in a..b {
                    ws.g_xh[e] = T::zero();
                }
                for e in a..b {
                    let g_mag = ws.scratch[e - a];
                    match offsets {
                        OffsetMode::None => {}
                        OffsetMode::PerCheck => g_weights[beta_off + ci] -= g_mag,
                        OffsetMode::PerEdge => g_weights[beta_off + e] -= g_mag,
                    }
                    let arg = st.arg[e];
                    if arg != NO_EDGE {
                        let j = arg as usize;
                        ws.g_xh[j] += g_mag * sign(st.xh[j]);
                    }
                }
            }
        }

        // VN layer: x̂ = Q(clip(w_vc d)), d = Λ_{l-1} − m_{l-1}
        ws.g_base.iter_mut().for_each(|g| *g = T::zero());
        let vc_off = layout.vc(l).start;
        let mut prev_gm = prev.map(|p| &mut p.gm);
        for e in 0..g.n_edges() {
            let x = st.x[e];
            let g_xc = ws.g_xh[e];
            level_grad(g_levels, QuantGroup::Vc, l, clip(x, lim), g_xc);
            let g_x = if x.abs() <= lim { g_xc } else { T::zero() };
            let g_d = if vn {
                g_weights[vc_off + e] += g_x * st.d[e];
                g_x * eff[vc_off + e]
            } else {
                g_x
            };
            ws.g_base[g.edge_var[e]] += g_d;
            let p = g.prev_edge[e];
            if p != NO_EDGE {
                if let Some(gm) = prev_gm.as_deref_mut() {
                    gm[p as usize] -= g_d;
                }
            }
        }
    }

    // Λ_{-1} = w_ch[0] · ch_q[0]
    let chq = if quant.is_some() { &ws.chq[0] } else { &ws.ch };
    let ch_off = layout.ch(0).start;
    for v in 0..n {
        let gb = ws.g_base[v];
        let g_chq = if vn {
            g_weights[ch_off + v] += gb * chq[v];
            gb * eff[ch_off + v]
        } else {
            gb
        };
        level_grad(g_levels, QuantGroup::Ch, 0, ws.ch[v], g_chq);
    }
}
