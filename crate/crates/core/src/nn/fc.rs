use rand::Rng;
use serde::{Deserialize, Serialize};

use super::store::ParameterStore;
use super::train::GraphModel;
use crate::autodiff::{Graph, NodeId};

/// Plain fully connected network with tanh hidden activations; the
/// conventional-PINN baseline. Inputs are affinely mapped to [-1, 1]
/// using per-feature training-set ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FcModel {
    /// Layer widths, input through output.
    pub dims: Vec<usize>,
    /// Per-feature (min, max) of the training inputs.
    pub norm: Vec<(f64, f64)>,
    pub store: ParameterStore,
}

impl FcModel {
    /// `hidden` layers of `width` units each between `in_dim` inputs and a
    /// scalar output; Xavier-uniform weights, zero biases.
    pub fn new(in_dim: usize, hidden: usize, width: usize, rng: &mut impl Rng) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat(width).take(hidden));
        dims.push(1);
        let mut store = ParameterStore::new();
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            store.insert(format!("fc.l{l}.w"), w);
            store.insert(format!("fc.l{l}.b"), vec![0.0; fan_out]);
        }
        let norm = vec![(-1.0, 1.0); in_dim];
        FcModel { dims, norm, store }
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
}

impl GraphModel for FcModel {
    fn input_dim(&self) -> usize {
        self.dims[0]
    }

    fn store(&self) -> &ParameterStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    fn build_forward(&self, g: &mut Graph, x: &[NodeId]) -> NodeId {
        let mut act: Vec<NodeId> = x
            .iter()
            .zip(&self.norm)
            .map(|(&xi, &(lo, hi))| {
                let a = 2.0 / (hi - lo);
                g.affine(xi, a, -1.0 - a * lo)
            })
            .collect();
        for l in 0..self.dims.len() - 1 {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let wname = format!("fc.l{l}.w");
            let bname = format!("fc.l{l}.b");
            let mut next = Vec::with_capacity(fan_out);
            for j in 0..fan_out {
                let mut z = g.param(&bname, j);
                for (i, &a) in act.iter().enumerate() {
                    let w = g.param(&wname, j * fan_in + i);
                    let wa = g.mul(w, a);
                    z = g.add(z, wa);
                }
                if l + 1 < self.dims.len() - 1 {
                    z = g.tanh(z);
                }
                next.push(z);
            }
            act = next;
        }
        act[0]
    }
}
