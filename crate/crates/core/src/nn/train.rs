use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::store::ParameterStore;
use crate::autodiff::{Executor, Graph, NodeId};
use crate::error::{Error, Result};

/// Shared training configuration. Defaults follow the experiment setup:
/// Adam with learning rate 0.01, full-batch gradients, 2000 steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_steps: usize,
    pub seed: u64,
    /// Steps of a loss plateau before a GINN growth event fires.
    pub growth_patience: usize,
    /// Relative improvement below which the plateau counts as stalled.
    pub growth_threshold: f64,
    pub ic_weight: f64,
    pub bc_weight: f64,
    /// Cadence of maintenance hooks (KAN grid updates, GINN-KAN output
    /// normalizer refresh, growth checks).
    pub maintenance_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            max_steps: 2000,
            seed: 0,
            growth_patience: 200,
            growth_threshold: 0.01,
            ic_weight: 1.0,
            bc_weight: 1.0,
            maintenance_interval: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if self.ic_weight < 0.0 || self.bc_weight < 0.0 {
            return Err(Error::InvalidConfig("loss weights must be >= 0".into()));
        }
        if self.maintenance_interval == 0 {
            return Err(Error::InvalidConfig(
                "maintenance interval must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Context handed to model maintenance hooks between optimizer steps.
pub struct MaintenanceCtx<'a> {
    pub step: usize,
    pub max_steps: usize,
    pub history: &'a [f64],
    /// Current batch values of nodes the model registered via
    /// [`Graph::watch`] when building its forward graph.
    pub watch: &'a HashMap<String, Vec<f64>>,
    pub rng: &'a mut dyn rand::RngCore,
}

/// A model that exposes its forward computation as an autodiff graph.
pub trait GraphModel {
    fn input_dim(&self) -> usize;
    fn store(&self) -> &ParameterStore;
    fn store_mut(&mut self) -> &mut ParameterStore;
    /// Builds the scalar prediction from one input node per feature.
    fn build_forward(&self, g: &mut Graph, x: &[NodeId]) -> NodeId;
    /// Periodic structural hook; returning `true` forces a graph rebuild.
    fn maintenance(&mut self, _ctx: MaintenanceCtx) -> bool {
        false
    }
    /// Highest input-derivative order the model supports; `None` means
    /// smooth to all orders. Spline-backed models are capped at k - 1.
    fn max_derivative_order(&self) -> Option<usize> {
        None
    }
}

/// One additive component of the training loss: `weight * mean(term)` over
/// the term's own batch of bound inputs.
pub struct LossTerm {
    pub graph: Graph,
    pub inputs: Vec<Vec<f64>>,
    pub term: NodeId,
    pub weight: f64,
}

impl LossTerm {
    pub fn batch_len(&self) -> usize {
        self.inputs.first().map(|c| c.len()).unwrap_or(1)
    }

    /// Strips graph nodes unreachable from the term and its watches.
    pub fn compacted(self) -> LossTerm {
        let (graph, roots) = self.graph.compacted(&[self.term]);
        LossTerm {
            graph,
            inputs: self.inputs,
            term: roots[0],
            weight: self.weight,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    /// Total loss per executed step, recorded before that step's update.
    pub loss_history: Vec<f64>,
}

pub struct Trainer {
    pub config: TrainConfig,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Self {
        Trainer { config }
    }

    /// Full-batch Adam loop over the terms produced by `build`. The builder
    /// is re-invoked whenever a maintenance hook reports a structural
    /// change (growth, grid update, normalizer refresh).
    pub fn run<M: GraphModel>(
        &self,
        model: &mut M,
        build: &mut dyn FnMut(&M) -> Result<Vec<LossTerm>>,
    ) -> Result<TrainLog> {
        self.config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut adam = Adam::new(self.config.lr);
        let mut log = TrainLog::default();

        let build_compacted = |model: &M, build: &mut dyn FnMut(&M) -> Result<Vec<LossTerm>>| {
            build(model).map(|ts| ts.into_iter().map(LossTerm::compacted).collect::<Vec<_>>())
        };
        let mut terms = build_compacted(model, build)?;
        let mut execs: Vec<Executor> = terms
            .iter()
            .map(|t| Executor::new(&t.graph, t.batch_len()))
            .collect();

        for step in 0..self.config.max_steps {
            let collect_watches = (step % self.config.maintenance_interval) == 0;
            let mut watch: HashMap<String, Vec<f64>> = HashMap::new();
            let mut total = 0.0;
            let mut grads = model.store().zeros_like();

            for (term, exec) in terms.iter().zip(execs.iter_mut()) {
                let n = term.batch_len();
                let cols: Vec<&[f64]> = term.inputs.iter().map(|c| c.as_slice()).collect();
                let mut pgrads = vec![0.0; term.graph.params().len()];
                let mut sum = 0.0;
                if collect_watches {
                    for (name, _) in term.graph.watches() {
                        watch.entry(name.clone()).or_insert_with(|| Vec::with_capacity(n));
                    }
                }
                let chunk = exec.chunk_len();
                let mut offset = 0;
                while offset < n {
                    let len = chunk.min(n - offset);
                    exec.forward_chunk(&term.graph, model.store(), &cols, offset, len)?;
                    sum += exec.chunk_values(term.term, len).iter().sum::<f64>();
                    if collect_watches {
                        for (name, node) in term.graph.watches() {
                            if let Some(buf) = watch.get_mut(name) {
                                buf.extend_from_slice(exec.chunk_values(*node, len));
                            }
                        }
                    }
                    exec.backward_chunk(
                        &term.graph,
                        term.term,
                        term.weight / n as f64,
                        len,
                        &mut pgrads,
                    );
                    offset += len;
                }
                total += term.weight * sum / n as f64;
                for (pref, gv) in term.graph.params().iter().zip(&pgrads) {
                    grads.accumulate(&pref.name, pref.index, *gv)?;
                }
            }

            if total.is_nan() {
                return Err(Error::NanLoss(step));
            }
            log.loss_history.push(total);
            adam.step(model.store_mut(), &grads)?;

            if collect_watches {
                let ctx = MaintenanceCtx {
                    step,
                    max_steps: self.config.max_steps,
                    history: &log.loss_history,
                    watch: &watch,
                    rng: &mut rng,
                };
                if model.maintenance(ctx) {
                    terms = build_compacted(model, build)?;
                    execs = terms
                        .iter()
                        .map(|t| Executor::new(&t.graph, t.batch_len()))
                        .collect();
                }
            }
        }
        Ok(log)
    }
}

/// Builds the single-term supervised MSE loss for `model` over feature
/// columns and targets.
pub fn supervised_term<M: GraphModel>(
    model: &M,
    features: &[Vec<f64>],
    targets: &[f64],
) -> Result<LossTerm> {
    let d = model.input_dim();
    if features.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: features.len(),
        });
    }
    let n = targets.len();
    if n == 0 || features.iter().any(|c| c.len() != n) {
        return Err(Error::Empty(1));
    }
    let mut g = Graph::new();
    let xs: Vec<NodeId> = (0..d).map(|i| g.input(i)).collect();
    let pred = model.build_forward(&mut g, &xs);
    let tgt = g.input(d);
    let diff = g.sub(pred, tgt);
    let term = g.mul(diff, diff);
    let mut inputs: Vec<Vec<f64>> = features.to_vec();
    inputs.push(targets.to_vec());
    Ok(LossTerm {
        graph: g,
        inputs,
        term,
        weight: 1.0,
    })
}

/// Trains `model` on input-output pairs by full-batch Adam on the MSE.
/// Returns the per-step loss history; `max_steps = 0` leaves the model
/// untouched.
pub fn train_supervised<M: GraphModel>(
    model: &mut M,
    features: &[Vec<f64>],
    targets: &[f64],
    config: &TrainConfig,
) -> Result<TrainLog> {
    let trainer = Trainer::new(config.clone());
    trainer.run(model, &mut |m| Ok(vec![supervised_term(m, features, targets)?]))
}

/// Evaluates the model's prediction over feature columns.
pub fn predict<M: GraphModel>(model: &M, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = model.input_dim();
    if features.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: features.len(),
        });
    }
    let mut g = Graph::new();
    let xs: Vec<NodeId> = (0..d).map(|i| g.input(i)).collect();
    let pred = model.build_forward(&mut g, &xs);
    let cols: Vec<&[f64]> = features.iter().map(|c| c.as_slice()).collect();
    let ev = g.evaluate(model.store(), &cols)?;
    Ok(ev.value(pred).to_vec())
}
