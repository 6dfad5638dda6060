//! Composite interpretable network: two parallel GINN branches, each seeing
//! all raw inputs, feeding a 2-layer KAN through per-branch affine output
//! normalizers. Trained end-to-end as a single autodiff graph.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::error::Result;
use crate::expr::SymbolicExpr;
use crate::ginn::{growth_controller, GinnCore, MAX_BLOCKS};
use crate::kan::{KanCore, Snap};
use crate::nn::{GraphModel, MaintenanceCtx, ParameterStore};
use crate::util::round_sig;

pub const N_BRANCHES: usize = 2;

/// Per-edge record of a snapped KAN activation, for extraction reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSnap {
    pub layer: usize,
    pub from: usize,
    pub to: usize,
    #[serde(flatten)]
    pub snap: Snap,
}

/// Everything equation extraction learned about a trained composite model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    /// Power-term expression of each GINN branch, rendered.
    pub branches: Vec<String>,
    pub edges: Vec<EdgeSnap>,
    pub equation: String,
    /// Edges whose best library fit explained the activation poorly
    /// (R² < 0.9); kept in the equation but flagged here.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GinnKanModel {
    pub ginns: Vec<GinnCore>,
    pub kan: KanCore,
    /// Per-feature input shift shared by both branches.
    pub shift: Vec<f64>,
    /// Per-branch running (min, max) of the GINN outputs; affinely mapped
    /// onto the KAN grid range [−1, 1].
    pub norm: Vec<(f64, f64)>,
    pub store: ParameterStore,
    pub growth_patience: usize,
    pub growth_threshold: f64,
    last_growth: Vec<usize>,
}

impl GinnKanModel {
    pub fn new(n_features: usize, rng: &mut impl Rng) -> Self {
        let ginns: Vec<GinnCore> = (0..N_BRANCHES)
            .map(|b| GinnCore::new(n_features, format!("g{b}")))
            .collect();
        let kan = KanCore::new(vec![N_BRANCHES, 5, 1], "kan");
        let mut store = ParameterStore::new();
        for g in &ginns {
            g.init_params(&mut store, rng);
        }
        kan.init_params(&mut store, rng);
        GinnKanModel {
            ginns,
            kan,
            shift: vec![0.0; n_features],
            norm: vec![(-1.0, 1.0); N_BRANCHES],
            store,
            growth_patience: 200,
            growth_threshold: 0.01,
            last_growth: vec![0; N_BRANCHES],
        }
    }

    /// Same positive-range shift rule as the standalone GINN.
    pub fn fit_shift(&mut self, features: &[Vec<f64>]) {
        assert_eq!(features.len(), self.shift.len());
        for (s, col) in self.shift.iter_mut().zip(features) {
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            *s = if min <= 0.0 { -min + 0.1 } else { 0.0 };
        }
    }

    fn branch_watch_name(b: usize) -> String {
        format!("branch{b}")
    }

    fn norm_affine(&self, b: usize) -> (f64, f64) {
        let (lo, hi) = self.norm[b];
        let a = 2.0 / (hi - lo);
        (a, -1.0 - a * lo)
    }

    /// Count of the GINN-side parameters, i.e. the composite's overhead
    /// relative to a standalone KAN of the same arity.
    pub fn ginn_parameter_count(&self) -> usize {
        self.ginns.iter().map(|g| g.n_parameters()).sum()
    }

    pub fn extract_report(&self) -> Result<ExtractionReport> {
        let args: Vec<SymbolicExpr> = (0..self.shift.len())
            .map(|j| SymbolicExpr::affine(SymbolicExpr::var(j), 1.0, round_sig(self.shift[j], 4)))
            .collect();
        let branch_exprs: Result<Vec<SymbolicExpr>> = self
            .ginns
            .iter()
            .map(|gc| gc.extract_equation(&self.store, &args))
            .collect();
        let branch_exprs = branch_exprs?;

        let snaps = self.kan.snap_all(&self.store)?;
        let kan_inputs: Vec<SymbolicExpr> = branch_exprs
            .iter()
            .enumerate()
            .map(|(b, e)| {
                let (a, c) = self.norm_affine(b);
                SymbolicExpr::affine(e.clone(), round_sig(a, 4), round_sig(c, 4))
            })
            .collect();
        let equation = self.kan.compose(&snaps, &kan_inputs);

        let mut edges = Vec::new();
        let mut warnings = Vec::new();
        for (l, layer) in snaps.iter().enumerate() {
            for (i, row) in layer.iter().enumerate() {
                for (j, snap) in row.iter().enumerate() {
                    if snap.r2 < 0.9 {
                        warnings.push(format!(
                            "layer {l} edge {i}->{j}: best fit {} has R^2 {:.4}",
                            snap.name, snap.r2
                        ));
                    }
                    edges.push(EdgeSnap { layer: l, from: i, to: j, snap: snap.clone() });
                }
            }
        }
        Ok(ExtractionReport {
            branches: branch_exprs.iter().map(|e| e.render()).collect(),
            edges,
            equation: equation.render(),
            warnings,
        })
    }

    pub fn extract_equation(&self) -> Result<SymbolicExpr> {
        let args: Vec<SymbolicExpr> = (0..self.shift.len())
            .map(|j| SymbolicExpr::affine(SymbolicExpr::var(j), 1.0, round_sig(self.shift[j], 4)))
            .collect();
        let snaps = self.kan.snap_all(&self.store)?;
        let kan_inputs: Result<Vec<SymbolicExpr>> = self
            .ginns
            .iter()
            .enumerate()
            .map(|(b, gc)| {
                let e = gc.extract_equation(&self.store, &args)?;
                let (a, c) = self.norm_affine(b);
                Ok(SymbolicExpr::affine(e, round_sig(a, 4), round_sig(c, 4)))
            })
            .collect();
        Ok(self.kan.compose(&snaps, &kan_inputs?))
    }
}

impl GraphModel for GinnKanModel {
    fn input_dim(&self) -> usize {
        self.shift.len()
    }

    fn store(&self) -> &ParameterStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    fn build_forward(&self, g: &mut Graph, x: &[NodeId]) -> NodeId {
        let shifted: Vec<NodeId> = x
            .iter()
            .zip(&self.shift)
            .map(|(&xi, &s)| g.affine(xi, 1.0, s))
            .collect();
        let normed: Vec<NodeId> = self
            .ginns
            .iter()
            .enumerate()
            .map(|(b, gc)| {
                let out = gc.build(g, &shifted);
                g.watch(Self::branch_watch_name(b), out);
                let (a, c) = self.norm_affine(b);
                g.affine(out, a, c)
            })
            .collect();
        self.kan.build(g, &normed)
    }

    fn maintenance(&mut self, mut ctx: MaintenanceCtx) -> bool {
        let mut changed = false;
        // Normalizers and spline grids stay fixed over the final quarter so
        // the optimizer converges against a stable basis; growth remains
        // allowed since it is prediction-neutral.
        let frozen = ctx.step >= ctx.max_steps - ctx.max_steps / 4;
        if !frozen {
            for b in 0..N_BRANCHES {
                let Some(samples) = ctx.watch.get(&Self::branch_watch_name(b)) else {
                    continue;
                };
                let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let (old_lo, old_hi) = self.norm[b];
                let new = (old_lo.min(lo), old_hi.max(hi.max(lo + 1e-6)));
                if new != self.norm[b] {
                    self.norm[b] = new;
                    changed = true;
                }
            }
            changed |= self.kan.update_grids(&mut self.store, ctx.watch).unwrap_or(false);
        }
        for b in 0..N_BRANCHES {
            if ctx.step < self.last_growth[b] + self.growth_patience {
                continue;
            }
            if self.ginns[b].n_blocks < MAX_BLOCKS
                && growth_controller(ctx.history, self.growth_patience, self.growth_threshold)
                && self.ginns[b].grow(&mut self.store, &mut ctx.rng)
            {
                self.last_growth[b] = ctx.step;
                changed = true;
            }
        }
        changed
    }

    fn max_derivative_order(&self) -> Option<usize> {
        self.kan
            .grids
            .iter()
            .flatten()
            .map(|grid| grid.k - 1)
            .min()
    }
}
