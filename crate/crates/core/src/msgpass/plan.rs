use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codes::ParityCheckMatrix;
use crate::msgpass::DecodeError;

/// Per-iteration parity-check matrices, stored as activity masks over a
/// shared pool of check rows.
///
/// A check keeps its identity (its pool row) across iterations, which is what
/// links an edge of iteration `l` to the matching edge of iteration `l - 1`
/// when the extrinsic sum is formed.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationPlan {
    pool: Arc<ParityCheckMatrix>,
    active: Vec<Vec<bool>>,
}

impl IterationPlan {
    /// `l_max` iterations over the same matrix, every check active.
    pub fn uniform(h: ParityCheckMatrix, l_max: usize) -> Result<Self, DecodeError> {
        Self::shared(Arc::new(h), l_max)
    }

    pub fn shared(pool: Arc<ParityCheckMatrix>, l_max: usize) -> Result<Self, DecodeError> {
        let m = pool.n_rows();
        Self::from_masks(pool, vec![vec![true; m]; l_max])
    }

    pub fn from_masks(pool: Arc<ParityCheckMatrix>, active: Vec<Vec<bool>>) -> Result<Self, DecodeError> {
        if active.is_empty() {
            return Err(DecodeError::EmptyPlan);
        }
        if let Some(l) = active.iter().position(|a| a.len() != pool.n_rows()) {
            return Err(DecodeError::Plan(format!(
                "mask of iteration {l} has {} entries for {} pool rows",
                active[l].len(),
                pool.n_rows()
            )));
        }
        if !active[0].iter().any(|&a| a) {
            return Err(DecodeError::NoActiveFirstLayer);
        }
        Ok(IterationPlan { pool, active })
    }

    /// Builds a plan from one matrix per iteration. Identical rows in different
    /// iterations are mapped to the same pool row.
    pub fn from_matrices(matrices: &[ParityCheckMatrix]) -> Result<Self, DecodeError> {
        let first = matrices.first().ok_or(DecodeError::EmptyPlan)?;
        let n = first.n_cols();
        let mut ids: HashMap<&[usize], usize> = HashMap::new();
        let mut rows: Vec<Vec<usize>> = Vec::new();
        let mut per_layer = Vec::with_capacity(matrices.len());
        for (l, h) in matrices.iter().enumerate() {
            if h.n_cols() != n {
                return Err(DecodeError::Plan(format!(
                    "iteration {l} has {} columns, expected {n}",
                    h.n_cols()
                )));
            }
            let mut layer = Vec::with_capacity(h.n_rows());
            for row in h.rows() {
                let id = *ids.entry(row.as_slice()).or_insert_with(|| {
                    rows.push(row.clone());
                    rows.len() - 1
                });
                layer.push(id);
            }
            per_layer.push(layer);
        }
        let pool = ParityCheckMatrix::new(n, rows).map_err(|e| DecodeError::Plan(e.to_string()))?;
        let active = per_layer
            .iter()
            .map(|ids| {
                let mut mask = vec![false; pool.n_rows()];
                for &i in ids {
                    mask[i] = true;
                }
                mask
            })
            .collect();
        Self::from_masks(Arc::new(pool), active)
    }

    pub fn l_max(&self) -> usize {
        self.active.len()
    }

    pub fn n_cols(&self) -> usize {
        self.pool.n_cols()
    }

    pub fn pool(&self) -> &Arc<ParityCheckMatrix> {
        &self.pool
    }

    pub fn mask(&self, layer: usize) -> &[bool] {
        &self.active[layer]
    }

    pub fn is_active(&self, layer: usize, check: usize) -> bool {
        self.active[layer][check]
    }

    /// Active pool rows of `layer`, ascending.
    pub fn active_checks(&self, layer: usize) -> Vec<usize> {
        self.active[layer]
            .iter()
            .enumerate()
            .filter_map(|(c, &a)| a.then_some(c))
            .collect()
    }

    pub fn n_active(&self, layer: usize) -> usize {
        self.active[layer].iter().filter(|&&a| a).count()
    }

    pub fn total_active(&self) -> usize {
        (0..self.l_max()).map(|l| self.n_active(l)).sum()
    }

    pub fn n_edges(&self, layer: usize) -> usize {
        self.active[layer]
            .iter()
            .zip(self.pool.row_weights())
            .filter_map(|(&a, &w)| a.then_some(w))
            .sum()
    }

    /// The parity-check matrix used in `layer` (active rows in pool order).
    pub fn layer_matrix(&self, layer: usize) -> ParityCheckMatrix {
        self.pool.select_rows(&self.active_checks(layer))
    }

    pub fn matrices(&self) -> Vec<ParityCheckMatrix> {
        (0..self.l_max()).map(|l| self.layer_matrix(l)).collect()
    }

    /// Marks a check inactive. The last check of the first iteration cannot be removed.
    pub fn deactivate(&mut self, layer: usize, check: usize) -> Result<(), DecodeError> {
        if layer >= self.l_max() || check >= self.pool.n_rows() {
            return Err(DecodeError::UnknownCheck { layer, check });
        }
        if !self.active[layer][check] {
            return Err(DecodeError::AlreadyPruned { layer, check });
        }
        if layer == 0 && self.n_active(0) == 1 {
            return Err(DecodeError::NoActiveFirstLayer);
        }
        self.active[layer][check] = false;
        Ok(())
    }

    /// True when every active check of `self` is active in `other`.
    pub fn is_subset_of(&self, other: &IterationPlan) -> bool {
        self.pool == other.pool
            && self.l_max() == other.l_max()
            && self
                .active
                .iter()
                .zip(&other.active)
                .all(|(a, b)| a.iter().zip(b).all(|(&x, &y)| !x || y))
    }

    pub fn compile(&self) -> Vec<LayerGraph> {
        let n = self.n_cols();
        let mut out: Vec<LayerGraph> = Vec::with_capacity(self.l_max());
        for l in 0..self.l_max() {
            let checks = self.active_checks(l);
            let mut cn_start = Vec::with_capacity(checks.len() + 1);
            let mut edge_var = Vec::new();
            cn_start.push(0);
            for &c in &checks {
                edge_var.extend_from_slice(self.pool.row(c));
                cn_start.push(edge_var.len());
            }
            let mut var_start = vec![0usize; n + 1];
            for &v in &edge_var {
                var_start[v + 1] += 1;
            }
            for v in 0..n {
                var_start[v + 1] += var_start[v];
            }
            let mut fill = var_start.clone();
            let mut var_edges = vec![0usize; edge_var.len()];
            for (e, &v) in edge_var.iter().enumerate() {
                var_edges[fill[v]] = e;
                fill[v] += 1;
            }
            let mut prev_edge = vec![NO_EDGE; edge_var.len()];
            if let Some(prev) = out.last() {
                let pos: HashMap<usize, usize> = prev.checks.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                for (ci, &c) in checks.iter().enumerate() {
                    if let Some(&pi) = pos.get(&c) {
                        let span = cn_start[ci + 1] - cn_start[ci];
                        for k in 0..span {
                            prev_edge[cn_start[ci] + k] = (prev.cn_start[pi] + k) as u32;
                        }
                    }
                }
            }
            out.push(LayerGraph {
                checks,
                cn_start,
                edge_var,
                var_start,
                var_edges,
                prev_edge,
            });
        }
        out
    }
}

pub const NO_EDGE: u32 = u32::MAX;

/// Flattened Tanner graph of one iteration.
///
/// Edges are numbered check by check (ascending pool row), and within a check
/// by ascending variable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerGraph {
    pub checks: Vec<usize>,
    pub cn_start: Vec<usize>,
    pub edge_var: Vec<usize>,
    /// CSR over variables; each variable's edges are in ascending check order.
    pub var_start: Vec<usize>,
    pub var_edges: Vec<usize>,
    /// Edge of the previous iteration with the same check and variable.
    pub prev_edge: Vec<u32>,
}

impl LayerGraph {
    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PlanRepr {
    pub n_cols: usize,
    pub pool: Vec<Vec<usize>>,
    pub active: Vec<Vec<usize>>,
}

impl Serialize for IterationPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PlanRepr {
            n_cols: self.n_cols(),
            pool: self.pool.rows().to_vec(),
            active: (0..self.l_max()).map(|l| self.active_checks(l)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for IterationPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = PlanRepr::deserialize(d)?;
        let pool = ParityCheckMatrix::new(r.n_cols, r.pool).map_err(D::Error::custom)?;
        let mut masks = Vec::with_capacity(r.active.len());
        for ids in &r.active {
            let mut mask = vec![false; pool.n_rows()];
            for &c in ids {
                if c >= pool.n_rows() {
                    return Err(D::Error::custom(format!("active check {c} outside the pool")));
                }
                mask[c] = true;
            }
            masks.push(mask);
        }
        IterationPlan::from_masks(Arc::new(pool), masks).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> ParityCheckMatrix {
        ParityCheckMatrix::new(7, vec![vec![0, 2, 4, 6], vec![1, 2, 5, 6], vec![3, 4, 5, 6]]).unwrap()
    }

    #[test]
    fn compile_links_previous_edges() {
        let mut plan = IterationPlan::uniform(hamming(), 3).unwrap();
        plan.deactivate(1, 0).unwrap();
        let g = plan.compile();
        assert_eq!(g[0].n_edges(), 12);
        assert_eq!(g[1].checks, vec![1, 2]);
        assert_eq!(g[1].prev_edge, (4..12).map(|e| e as u32).collect::<Vec<_>>());
        // check 0 is back in layer 2 but was absent in layer 1
        assert!(g[2].prev_edge[..4].iter().all(|&p| p == NO_EDGE));
        assert_eq!(g[2].prev_edge[4], 0);
        let v6: Vec<usize> = g[0].var_edges[g[0].var_start[6]..g[0].var_start[7]].to_vec();
        assert_eq!(v6, vec![3, 7, 11]);
    }

    #[test]
    fn from_matrices_shares_rows() {
        let h = hamming();
        let plan = IterationPlan::from_matrices(&[h.clone(), h.select_rows(&[2]), h.select_rows(&[0, 2])]).unwrap();
        assert_eq!(plan.pool().n_rows(), 3);
        assert_eq!(plan.active_checks(1), vec![2]);
        assert_eq!(plan.layer_matrix(2), h.select_rows(&[0, 2]));
        assert_eq!(plan.total_active(), 6);
    }

    #[test]
    fn pruning_rules() {
        let mut plan = IterationPlan::uniform(hamming(), 2).unwrap();
        plan.deactivate(0, 0).unwrap();
        assert!(matches!(plan.deactivate(0, 0), Err(DecodeError::AlreadyPruned { .. })));
        plan.deactivate(0, 1).unwrap();
        assert!(matches!(plan.deactivate(0, 2), Err(DecodeError::NoActiveFirstLayer)));
        for c in 0..3 {
            plan.deactivate(1, c).unwrap();
        }
        assert_eq!(plan.n_active(1), 0);
        assert!(plan.compile()[1].edge_var.is_empty());
    }

    #[test]
    fn serde_round_trip() {
        let mut plan = IterationPlan::uniform(hamming(), 2).unwrap();
        plan.deactivate(1, 1).unwrap();
        let s = serde_json::to_string(&plan).unwrap();
        let back: IterationPlan = serde_json::from_str(&s).unwrap();
        assert_eq!(back, plan);
    }
}
