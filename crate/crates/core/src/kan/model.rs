use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::snap::{snap_to_symbolic, Snap};
use super::spline::{bspline_basis, bspline_basis_graph, fit_coefficients, SplineGrid};
use crate::autodiff::{Graph, NodeId};
use crate::error::Result;
use crate::expr::SymbolicExpr;
use crate::nn::{GraphModel, MaintenanceCtx, ParameterStore};
use crate::util::linspace;

/// Stack of Kolmogorov-Arnold layers expressed over a shared parameter
/// store. `dims` lists node counts per layer, e.g. `[2, 5, 1]`.
///
/// Every edge leaving input `i` of layer `l` sees the same sample stream,
/// so the knot grid is kept once per (layer, input) and shared by the
/// edges; coefficients stay per-edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanCore {
    pub dims: Vec<usize>,
    pub grids: Vec<Vec<SplineGrid>>,
    pub prefix: String,
}

impl KanCore {
    pub fn new(dims: Vec<usize>, prefix: impl Into<String>) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0));
        let grids = dims[..dims.len() - 1]
            .iter()
            .map(|&d| vec![SplineGrid::default(); d])
            .collect();
        KanCore { dims, grids, prefix: prefix.into() }
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn n_activations(&self) -> usize {
        (0..self.n_layers()).map(|l| self.dims[l] * self.dims[l + 1]).sum()
    }

    fn coef_name(&self, layer: usize, i: usize, j: usize) -> String {
        format!("{}.l{layer}.e{i}_{j}.c", self.prefix)
    }

    fn wb_name(&self, layer: usize, i: usize, j: usize) -> String {
        format!("{}.l{layer}.e{i}_{j}.wb", self.prefix)
    }

    fn ws_name(&self, layer: usize, i: usize, j: usize) -> String {
        format!("{}.l{layer}.e{i}_{j}.ws", self.prefix)
    }

    fn watch_name(&self, layer: usize, i: usize) -> String {
        format!("{}.l{layer}.in{i}", self.prefix)
    }

    /// Inserts freshly initialized edge parameters: unit base and spline
    /// weights, small random spline coefficients.
    pub fn init_params(&self, store: &mut ParameterStore, rng: &mut impl Rng) {
        for l in 0..self.n_layers() {
            let n_coef = self.grids[l][0].n_coef();
            for i in 0..self.dims[l] {
                for j in 0..self.dims[l + 1] {
                    let coef: Vec<f64> =
                        (0..n_coef).map(|_| rng.gen_range(-0.1..0.1)).collect();
                    store.insert(self.coef_name(l, i, j), coef);
                    store.insert(self.wb_name(l, i, j), vec![1.0]);
                    store.insert(self.ws_name(l, i, j), vec![1.0]);
                }
            }
        }
    }

    /// Builds the forward graph from one node per first-layer input and
    /// returns the scalar output node. Layer inputs are watched so the
    /// training loop can feed their sample values back to `update_grids`.
    pub fn build(&self, g: &mut Graph, inputs: &[NodeId]) -> NodeId {
        assert_eq!(inputs.len(), self.dims[0]);
        let mut current = inputs.to_vec();
        for l in 0..self.n_layers() {
            let (in_dim, out_dim) = (self.dims[l], self.dims[l + 1]);
            let mut basis = Vec::with_capacity(in_dim);
            let mut silu = Vec::with_capacity(in_dim);
            for (i, &x) in current.iter().enumerate() {
                g.watch(self.watch_name(l, i), x);
                basis.push(bspline_basis_graph(g, x, &self.grids[l][i]));
                silu.push(g.silu(x));
            }
            let mut next = Vec::with_capacity(out_dim);
            for j in 0..out_dim {
                let mut acc = None;
                for i in 0..in_dim {
                    let cname = self.coef_name(l, i, j);
                    let mut spline = None;
                    for (m, &bm) in basis[i].iter().enumerate() {
                        let cm = g.param(&cname, m);
                        let term = g.mul(cm, bm);
                        spline = Some(g.add_scaled(spline, term));
                    }
                    let spline = spline.expect("grid has at least one basis function");
                    let ws = g.param(&self.ws_name(l, i, j), 0);
                    let wb = g.param(&self.wb_name(l, i, j), 0);
                    let s_term = g.mul(ws, spline);
                    let b_term = g.mul(wb, silu[i]);
                    let act = g.add(b_term, s_term);
                    acc = Some(g.add_scaled(acc, act));
                }
                next.push(acc.expect("layer has at least one input"));
            }
            current = next;
        }
        assert_eq!(current.len(), 1, "final layer must be scalar");
        current[0]
    }

    /// Regrids each (layer, input) to the current sample span from `watch`
    /// and re-fits all affected edge coefficients to preserve their spline
    /// functions. Returns whether any grid actually moved (that requires a
    /// graph rebuild, since knots are baked in as constants).
    pub fn update_grids(
        &mut self,
        store: &mut ParameterStore,
        watch: &HashMap<String, Vec<f64>>,
    ) -> Result<bool> {
        let mut changed = false;
        for l in 0..self.n_layers() {
            for i in 0..self.dims[l] {
                let Some(samples) = watch.get(&self.watch_name(l, i)) else {
                    continue;
                };
                let Some(new_grid) = self.grids[l][i].from_samples(samples) else {
                    continue;
                };
                let old = &self.grids[l][i];
                let tol = 1e-12 * (1.0 + old.hi.abs().max(old.lo.abs()));
                if (new_grid.lo - old.lo).abs() <= tol && (new_grid.hi - old.hi).abs() <= tol {
                    continue;
                }
                for j in 0..self.dims[l + 1] {
                    let cname = self.coef_name(l, i, j);
                    let old_coef = store.get(&cname)?.to_vec();
                    let old_grid = self.grids[l][i].clone();
                    let refit = fit_coefficients(&new_grid, &|x| {
                        bspline_basis(x, &old_grid)
                            .iter()
                            .zip(&old_coef)
                            .map(|(b, c)| b * c)
                            .sum()
                    });
                    *store.get_mut(&cname)? = refit;
                }
                self.grids[l][i] = new_grid;
                changed = true;
            }
        }
        Ok(changed)
    }

    /// Numeric value of edge (layer, i → j)'s activation at `x`.
    pub fn activation_value(&self, store: &ParameterStore, l: usize, i: usize, j: usize, x: f64) -> Result<f64> {
        let coef = store.get(&self.coef_name(l, i, j))?;
        let wb = store.scalar(&self.wb_name(l, i, j))?;
        let ws = store.scalar(&self.ws_name(l, i, j))?;
        let spline: f64 = bspline_basis(x, &self.grids[l][i])
            .iter()
            .zip(coef)
            .map(|(b, c)| b * c)
            .sum();
        Ok(wb * x / (1.0 + (-x).exp()) + ws * spline)
    }

    /// Snaps every edge activation to its best library match, probing each
    /// over its own grid range.
    pub fn snap_all(&self, store: &ParameterStore) -> Result<Vec<Vec<Vec<Snap>>>> {
        let mut out = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let mut layer = Vec::with_capacity(self.dims[l]);
            for i in 0..self.dims[l] {
                let grid = &self.grids[l][i];
                let xs = linspace(grid.lo, grid.hi, 64);
                let mut row = Vec::with_capacity(self.dims[l + 1]);
                for j in 0..self.dims[l + 1] {
                    let ys: Result<Vec<f64>> = xs
                        .iter()
                        .map(|&x| self.activation_value(store, l, i, j, x))
                        .collect();
                    row.push(snap_to_symbolic(&xs, &ys?, grid.lo, grid.hi));
                }
                layer.push(row);
            }
            out.push(layer);
        }
        Ok(out)
    }

    /// Composes the snapped edges into one closed-form expression of the
    /// given first-layer input expressions.
    pub fn compose(&self, snaps: &[Vec<Vec<Snap>>], inputs: &[SymbolicExpr]) -> SymbolicExpr {
        let mut current = inputs.to_vec();
        for (l, layer) in snaps.iter().enumerate() {
            let mut next = Vec::with_capacity(self.dims[l + 1]);
            for j in 0..self.dims[l + 1] {
                let terms = (0..self.dims[l])
                    .map(|i| layer[i][j].expr(current[i].clone()))
                    .collect();
                next.push(SymbolicExpr::sum(terms));
            }
            current = next;
        }
        current.remove(0)
    }
}

/// Standalone KAN regressor: per-feature affine normalization to [−1, 1]
/// followed by a [`KanCore`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KanModel {
    pub core: KanCore,
    /// Per-feature (min, max) of the training inputs.
    pub norm: Vec<(f64, f64)>,
    pub store: ParameterStore,
}

impl KanModel {
    pub fn new(in_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let core = KanCore::new(vec![in_dim, hidden, 1], "kan");
        let mut store = ParameterStore::new();
        core.init_params(&mut store, rng);
        let norm = vec![(-1.0, 1.0); in_dim];
        KanModel { core, norm, store }
    }

    /// Sets the input normalizer from training-set feature columns.
    pub fn fit_normalizer(&mut self, features: &[Vec<f64>]) {
        assert_eq!(features.len(), self.norm.len());
        for (slot, col) in self.norm.iter_mut().zip(features) {
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            *slot = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        }
    }

    fn norm_affine(&self, feature: usize) -> (f64, f64) {
        let (lo, hi) = self.norm[feature];
        let a = 2.0 / (hi - lo);
        (a, -1.0 - a * lo)
    }

    /// Closed-form expression of the trained model in the raw inputs.
    pub fn extract_equation(&self) -> Result<SymbolicExpr> {
        let snaps = self.core.snap_all(&self.store)?;
        let inputs: Vec<SymbolicExpr> = (0..self.core.dims[0])
            .map(|i| {
                let (a, b) = self.norm_affine(i);
                SymbolicExpr::affine(SymbolicExpr::var(i), a, b)
            })
            .collect();
        Ok(self.core.compose(&snaps, &inputs))
    }
}

impl GraphModel for KanModel {
    fn input_dim(&self) -> usize {
        self.core.dims[0]
    }

    fn store(&self) -> &ParameterStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    fn build_forward(&self, g: &mut Graph, x: &[NodeId]) -> NodeId {
        let normed: Vec<NodeId> = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let (a, b) = self.norm_affine(i);
                g.affine(xi, a, b)
            })
            .collect();
        self.core.build(g, &normed)
    }

    fn maintenance(&mut self, ctx: MaintenanceCtx) -> bool {
        // Keep the grids where they are for the final quarter of training
        // so the optimizer converges against a fixed basis.
        if ctx.step >= ctx.max_steps - ctx.max_steps / 4 {
            return false;
        }
        self.core
            .update_grids(&mut self.store, ctx.watch)
            .unwrap_or(false)
    }

    fn max_derivative_order(&self) -> Option<usize> {
        self.core
            .grids
            .iter()
            .flatten()
            .map(|grid| grid.k - 1)
            .min()
    }
}
