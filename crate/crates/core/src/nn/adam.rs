use indexmap::IndexMap;

use super::store::{ParamGrads, ParameterStore};
use crate::error::{Error, Result};

/// Adam optimizer with bias correction (beta1 = 0.9, beta2 = 0.999,
/// eps = 1e-8). One step count is shared across all parameters.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: IndexMap<String, Vec<f64>>,
    v: IndexMap<String, Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: IndexMap::new(),
            v: IndexMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update over every tensor named in `grads`. Tensors that
    /// appear for the first time (e.g. freshly grown GINN blocks) get zero
    /// moments, matching a newly created parameter.
    pub fn step(&mut self, store: &mut ParameterStore, grads: &ParamGrads) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (name, g) in grads.iter() {
            let p = store.get_mut(name)?;
            if p.len() != g.len() {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    expected: p.len(),
                    actual: g.len(),
                });
            }
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            if m.len() != g.len() {
                return Err(Error::ShapeMismatch {
                    name: name.clone(),
                    expected: m.len(),
                    actual: g.len(),
                });
            }
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
