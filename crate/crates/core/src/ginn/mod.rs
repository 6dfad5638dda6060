//! Growing interpretable network: parallel power-term approximator (PTA)
//! blocks `exp(Σ_j w_ij·ln(x_j)) = Π_j x_j^w_ij` combined by one linear
//! neuron, growing from 1 up to 4 blocks when the loss plateaus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::expr::SymbolicExpr;
use crate::nn::{GraphModel, MaintenanceCtx, ParameterStore};
use crate::util::round_sig;

pub const MAX_BLOCKS: usize = 4;

/// Output of one PTA block at a strictly positive point: `Π_j x_j^w_j`.
/// Errors name the first non-positive feature.
pub fn pta_forward(w: &[f64], x: &[f64]) -> Result<f64> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), actual: x.len() });
    }
    let mut s = 0.0;
    for (j, (&wj, &xj)) in w.iter().zip(x).enumerate() {
        if xj <= 0.0 {
            return Err(Error::NonPositiveInput { feature: j, value: xj });
        }
        s += wj * xj.ln();
    }
    Ok(s.exp())
}

/// Signals growth when the relative loss improvement over the last
/// `patience` steps falls below `threshold`.
pub fn growth_controller(history: &[f64], patience: usize, threshold: f64) -> bool {
    if history.len() < patience + 1 {
        return false;
    }
    let then = history[history.len() - 1 - patience];
    let now = history[history.len() - 1];
    let improvement = (then - now) / then.abs().max(f64::MIN_POSITIVE);
    improvement < threshold
}

/// The PTA-block stack expressed over a shared parameter store; used both
/// standalone (via [`GinnModel`]) and as a branch inside the composite
/// model. Parameters live under `{prefix}.pta{i}.w` (exponents) and
/// `{prefix}.a{i}` (output coefficients); per-block coefficient tensors let
/// the optimizer keep existing moments across growth events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinnCore {
    pub n_features: usize,
    pub n_blocks: usize,
    pub prefix: String,
}

impl GinnCore {
    pub fn new(n_features: usize, prefix: impl Into<String>) -> Self {
        assert!(n_features > 0);
        GinnCore { n_features, n_blocks: 1, prefix: prefix.into() }
    }

    fn w_name(&self, i: usize) -> String {
        format!("{}.pta{i}.w", self.prefix)
    }

    fn a_name(&self, i: usize) -> String {
        format!("{}.a{i}", self.prefix)
    }

    /// First block: exponents uniform(0, 1), unit output coefficient.
    pub fn init_params(&self, store: &mut ParameterStore, rng: &mut impl Rng) {
        assert_eq!(self.n_blocks, 1);
        let w: Vec<f64> = (0..self.n_features).map(|_| rng.gen_range(0.0..1.0)).collect();
        store.insert(self.w_name(0), w);
        store.insert(self.a_name(0), vec![1.0]);
    }

    pub fn n_parameters(&self) -> usize {
        self.n_blocks * (self.n_features + 1)
    }

    /// Builds `Σ_i a_i·exp(Σ_j w_ij·ln(x_j))` over already-shifted inputs,
    /// keeping the explicit log/exp structure of the PTA blocks.
    pub fn build(&self, g: &mut Graph, inputs: &[NodeId]) -> NodeId {
        assert_eq!(inputs.len(), self.n_features);
        let lns: Vec<NodeId> = inputs.iter().map(|&x| g.ln(x)).collect();
        let mut acc = None;
        for i in 0..self.n_blocks {
            let wname = self.w_name(i);
            let mut s = None;
            for (j, &lx) in lns.iter().enumerate() {
                let w = g.param(&wname, j);
                let term = g.mul(w, lx);
                s = Some(g.add_scaled(s, term));
            }
            let p = g.exp(s.expect("at least one feature"));
            let a = g.param(&self.a_name(i), 0);
            let term = g.mul(a, p);
            acc = Some(g.add_scaled(acc, term));
        }
        acc.expect("at least one block")
    }

    /// Appends one block with uniform(0, 1) exponents and a zero output
    /// coefficient, so predictions are bitwise unchanged. Returns `false`
    /// (no-op) at the 4-block cap.
    pub fn grow(&mut self, store: &mut ParameterStore, rng: &mut impl Rng) -> bool {
        if self.n_blocks >= MAX_BLOCKS {
            return false;
        }
        let i = self.n_blocks;
        let w: Vec<f64> = (0..self.n_features).map(|_| rng.gen_range(0.0..1.0)).collect();
        store.insert(self.w_name(i), w);
        store.insert(self.a_name(i), vec![0.0]);
        self.n_blocks += 1;
        true
    }

    /// Prediction at one already-shifted point.
    pub fn forward(&self, store: &ParameterStore, x: &[f64]) -> Result<f64> {
        let mut y = 0.0;
        for i in 0..self.n_blocks {
            let w = store.get(&self.w_name(i))?;
            let a = store.scalar(&self.a_name(i))?;
            y += a * pta_forward(w, x)?;
        }
        Ok(y)
    }

    /// Closed form `Σ a_i·Π arg_j^w_ij` with coefficients rounded to 4
    /// significant digits; terms with |a_i| < 1e-4 are dropped and
    /// exponents within 1e-4 of 0 or 1 simplify away.
    pub fn extract_equation(&self, store: &ParameterStore, args: &[SymbolicExpr]) -> Result<SymbolicExpr> {
        let mut terms = Vec::new();
        for i in 0..self.n_blocks {
            let a = store.scalar(&self.a_name(i))?;
            if a.abs() < 1e-4 {
                continue;
            }
            let w = store.get(&self.w_name(i))?;
            let mut factors = vec![SymbolicExpr::constant(round_sig(a, 4))];
            for (j, &wj) in w.iter().enumerate() {
                let e = round_sig(wj, 4);
                if e.abs() < 1e-4 {
                    continue;
                }
                factors.push(SymbolicExpr::pow(args[j].clone(), e));
            }
            terms.push(SymbolicExpr::product(factors));
        }
        Ok(SymbolicExpr::sum(terms))
    }
}

/// Standalone GINN regressor: a per-feature shift into the positive range
/// followed by a [`GinnCore`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GinnModel {
    pub core: GinnCore,
    /// Per-feature translation (≥ 0) keeping all training inputs > 0.
    pub shift: Vec<f64>,
    pub store: ParameterStore,
    pub growth_patience: usize,
    pub growth_threshold: f64,
    last_growth: usize,
}

impl GinnModel {
    pub fn new(n_features: usize, rng: &mut impl Rng) -> Self {
        let core = GinnCore::new(n_features, "ginn");
        let mut store = ParameterStore::new();
        core.init_params(&mut store, rng);
        GinnModel {
            core,
            shift: vec![0.0; n_features],
            store,
            growth_patience: 200,
            growth_threshold: 0.01,
            last_growth: 0,
        }
    }

    /// Sets each feature's shift to `-min + 0.1` when its training column
    /// reaches 0 or below, and leaves positive features untouched.
    pub fn fit_shift(&mut self, features: &[Vec<f64>]) {
        assert_eq!(features.len(), self.shift.len());
        for (s, col) in self.shift.iter_mut().zip(features) {
            let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
            *s = if min <= 0.0 { -min + 0.1 } else { 0.0 };
        }
    }

    /// Prediction at one raw point.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.shift).map(|(v, s)| v + s).collect();
        self.core.forward(&self.store, &shifted)
    }

    pub fn extract_equation(&self) -> Result<SymbolicExpr> {
        let args: Vec<SymbolicExpr> = (0..self.core.n_features)
            .map(|j| SymbolicExpr::affine(SymbolicExpr::var(j), 1.0, round_sig(self.shift[j], 4)))
            .collect();
        self.core.extract_equation(&self.store, &args)
    }
}

impl GraphModel for GinnModel {
    fn input_dim(&self) -> usize {
        self.core.n_features
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
        self.core.build(g, &shifted)
    }

    fn maintenance(&mut self, mut ctx: MaintenanceCtx) -> bool {
        if ctx.step < self.last_growth + self.growth_patience {
            return false;
        }
        if self.core.n_blocks < MAX_BLOCKS
            && growth_controller(ctx.history, self.growth_patience, self.growth_threshold)
            && self.core.grow(&mut self.store, &mut ctx.rng)
        {
            self.last_growth = ctx.step;
            return true;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::autodiff::Executor;
    use crate::error::Error;
    use crate::nn::{predict, train_supervised, TrainConfig};

    #[test]
    fn pta_hand_values() {
        assert!((pta_forward(&[1.0, 2.0], &[2.0, 3.0]).unwrap() - 18.0).abs() < 1e-12);
        assert_eq!(pta_forward(&[0.0, 0.0, 0.0], &[5.0, 0.3, 9.1]).unwrap(), 1.0);
        assert!((pta_forward(&[-1.0], &[4.0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pta_rejects_nonpositive_input() {
        match pta_forward(&[1.0, 1.0], &[2.0, -0.5]) {
            Err(Error::NonPositiveInput { feature, value }) => {
                assert_eq!(feature, 1);
                assert_eq!(value, -0.5);
            }
            other => panic!("expected NonPositiveInput, got {other:?}"),
        }
    }

    fn hand_model(blocks: &[(&[f64], f64)], n_features: usize) -> GinnModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = GinnModel::new(n_features, &mut rng);
        model.store.insert("ginn.pta0.w", blocks[0].0.to_vec());
        model.store.insert("ginn.a0", vec![blocks[0].1]);
        for (i, (w, a)) in blocks.iter().enumerate().skip(1) {
            model.core.grow(&mut model.store, &mut rng);
            model.store.insert(format!("ginn.pta{i}.w"), w.to_vec());
            model.store.insert(format!("ginn.a{i}"), vec![*a]);
        }
        model
    }

    #[test]
    fn forward_hand_values() {
        let m = hand_model(&[(&[1.0, 2.0], 1.0)], 2);
        assert!((m.forward(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);

        // 1·(2·3) + 3·(2²·3⁰) = 6 + 12 = 18
        let m = hand_model(&[(&[1.0, 1.0], 1.0), (&[2.0, 0.0], 3.0)], 2);
        assert!((m.forward(&[2.0, 3.0]).unwrap() - 18.0).abs() < 1e-12);

        let m = hand_model(&[(&[1.0, 1.0], 0.0), (&[2.0, 0.0], 0.0)], 2);
        assert_eq!(m.forward(&[0.7, 1.9]).unwrap(), 0.0);
    }

    #[test]
    fn graph_forward_matches_numeric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = GinnModel::new(3, &mut rng);
        model.core.grow(&mut model.store, &mut rng);
        model.shift = vec![0.0, 0.4, 0.0];
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| rng.gen_range(0.5..3.0)).collect())
            .collect();
        let preds = predict(&model, &cols).unwrap();
        for i in 0..50 {
            let x = [cols[0][i], cols[1][i], cols[2][i]];
            assert!((preds[i] - model.forward(&x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn grow_is_prediction_neutral_and_caps_at_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = GinnModel::new(2, &mut rng);
        let points: Vec<[f64; 2]> = (0..100)
            .map(|_| [rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)])
            .collect();
        let before: Vec<f64> = points.iter().map(|p| model.forward(p).unwrap()).collect();
        assert!(model.core.grow(&mut model.store, &mut rng));
        let after: Vec<f64> = points.iter().map(|p| model.forward(p).unwrap()).collect();
        for (b, a) in before.iter().zip(&after) {
            assert_eq!(b.to_bits(), a.to_bits());
        }
        assert!(model.core.grow(&mut model.store, &mut rng));
        assert!(model.core.grow(&mut model.store, &mut rng));
        assert!(!model.core.grow(&mut model.store, &mut rng), "cap at 4 blocks");
        assert_eq!(model.core.n_blocks, 4);
    }

    #[test]
    fn growth_controller_rules() {
        // Strictly halving loss never signals.
        let halving: Vec<f64> = (0..300).map(|i| 2.0f64.powi(-i)).collect();
        assert!(!growth_controller(&halving, 200, 0.01));
        // Exact plateau signals.
        let flat = vec![0.5; 250];
        assert!(growth_controller(&flat, 200, 0.01));
        // 0.5% improvement over 200 steps is under a 1% threshold.
        let mut slow = vec![1.0];
        for i in 1..=200 {
            slow.push(1.0 - 0.005 * i as f64 / 200.0);
        }
        assert!(growth_controller(&slow, 200, 0.01));
        // Too little history never signals.
        assert!(!growth_controller(&[1.0, 1.0], 200, 0.01));
    }

    #[test]
    fn training_on_plateau_grows_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 256;
        let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a + 3.0 * b * b).collect();
        let mut model = GinnModel::new(2, &mut rng);
        model.fit_shift(&[x1.clone(), x2.clone()]);
        let cfg = TrainConfig { max_steps: 3500, ..TrainConfig::default() };
        train_supervised(&mut model, &[x1, x2], &y, &cfg).unwrap();
        assert!(model.core.n_blocks >= 2, "expected growth, still {} block(s)", model.core.n_blocks);
    }

    #[test]
    fn fit_shift_only_moves_nonpositive_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = GinnModel::new(2, &mut rng);
        model.fit_shift(&[vec![-1.5, 2.0, 0.3], vec![0.5, 1.0, 2.0]]);
        assert!((model.shift[0] - 1.6).abs() < 1e-12);
        assert_eq!(model.shift[1], 0.0);
    }

    #[test]
    fn extraction_hand_cases() {
        let m = hand_model(&[(&[1.0, 2.0], 1.0)], 2);
        assert_eq!(m.extract_equation().unwrap().render(), "x1*x2^2");

        let m = hand_model(&[(&[1.0, 2.0], 0.00001)], 2);
        assert_eq!(m.extract_equation().unwrap().render(), "0");

        let m = hand_model(&[(&[1.0, 0.0], 2.0), (&[0.0, 1.0], 3.0)], 2);
        assert_eq!(m.extract_equation().unwrap().render(), "2*x1 + 3*x2");
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = GinnModel::new(2, &mut rng);
        model.core.grow(&mut model.store, &mut rng);
        *model.store.get_mut("ginn.a1").unwrap() = vec![0.7];
        let x = [vec![1.7], vec![0.6]];

        let mut g = Graph::new();
        let xs = [g.input(0), g.input(1)];
        let out = model.build_forward(&mut g, &xs);
        let mut exec = Executor::new(&g, 1);
        let cols: Vec<&[f64]> = x.iter().map(|c| c.as_slice()).collect();
        exec.forward_chunk(&g, model.store(), &cols, 0, 1).unwrap();
        let mut grads = vec![0.0; g.params().len()];
        exec.backward_chunk(&g, out, 1.0, 1, &mut grads);

        let h = 1e-6;
        for (pref, &grad) in g.params().iter().zip(&grads) {
            let base = model.store.get(&pref.name).unwrap()[pref.index];
            let probe = |v: f64| {
                let mut m = model.clone();
                m.store.get_mut(&pref.name).unwrap()[pref.index] = v;
                m.forward(&[x[0][0], x[1][0]]).unwrap()
            };
            let fd = (probe(base + h) - probe(base - h)) / (2.0 * h);
            let rel = (grad - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-4, "{}[{}]: {grad} vs {fd}", pref.name, pref.index);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        /// The log/exp graph structure agrees with the direct product.
        #[test]
        fn pta_equals_direct_product(
            w in proptest::collection::vec(-3.0f64..3.0, 1..5),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..w.len()).map(|_| rng.gen_range(0.1..10.0)).collect();
            let got = pta_forward(&w, &x).unwrap();
            let direct: f64 = w.iter().zip(&x).map(|(&wj, &xj)| xj.powf(wj)).product();
            let rel = (got - direct).abs() / direct.abs().max(1e-300);
            prop_assert!(rel < 1e-10, "{got} vs {direct}");
        }

        /// Rendered equations evaluate back to the model's prediction
        /// within the 4-significant-digit rounding bound.
        #[test]
        fn extraction_round_trips(
            w1 in proptest::collection::vec(-2.0f64..2.0, 2),
            w2 in proptest::collection::vec(-2.0f64..2.0, 2),
            a1 in 0.2f64..3.0,
            a2 in -3.0f64..-0.2,
            seed in any::<u64>(),
        ) {
            let m = hand_model(&[(&w1, a1), (&w2, a2)], 2);
            let expr = m.extract_equation().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let x = [rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0)];
                let direct = m.forward(&x).unwrap();
                let rendered = expr.eval(&x);
                // Scale by the term magnitudes: cancellation between blocks
                // can make the result itself arbitrarily small.
                let scale = a1.abs() * pta_forward(&w1, &x).unwrap()
                    + a2.abs() * pta_forward(&w2, &x).unwrap();
                // Each exponent and coefficient carries up to 5e-4 relative
                // rounding error, compounded across factors and terms.
                let rel = (rendered - direct).abs() / scale.max(1.0);
                prop_assert!(rel < 5e-3, "{rendered} vs {direct} at {x:?}");
            }
        }
    }
}
