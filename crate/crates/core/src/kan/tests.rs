use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autodiff::{grad_graph, Graph, NoParams};
use crate::expr::apply_named;
use crate::nn::{predict, train_supervised, ParameterStore, TrainConfig};
use crate::util::linspace;

#[test]
fn grid_dimensions_match_defaults() {
    let grid = SplineGrid::default();
    assert_eq!(grid.g, 5);
    assert_eq!(grid.k, 3);
    assert_eq!(grid.knots.len(), 12); // G + 2k + 1
    assert_eq!(grid.n_coef(), 8); // G + k
    for w in grid.knots.windows(2) {
        assert!(w[1] > w[0]);
    }
}

#[test]
fn basis_partition_of_unity_inside_range() {
    let grid = SplineGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let x = rng.gen_range(-1.0..1.0);
        let s: f64 = bspline_basis(x, &grid).iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "sum {s} at {x}");
    }
}

#[test]
fn basis_local_support() {
    let grid = SplineGrid::default();
    // At an interior knot at most k+1 basis functions are nonzero.
    for &knot in &grid.knots[grid.k + 1..grid.knots.len() - grid.k - 1] {
        let nz = bspline_basis(knot, &grid).iter().filter(|b| b.abs() > 1e-14).count();
        assert!(nz <= grid.k + 1, "{nz} nonzero at knot {knot}");
    }
    // Each basis function is supported on at most k+1 consecutive interior
    // intervals (outside [lo, hi] the boundary pieces extend polynomially).
    for m in 0..grid.n_coef() {
        let mut nz_intervals = Vec::new();
        for j in grid.k..grid.k + grid.g {
            let mid = 0.5 * (grid.knots[j] + grid.knots[j + 1]);
            if bspline_basis(mid, &grid)[m].abs() > 1e-14 {
                nz_intervals.push(j);
            }
        }
        assert!(nz_intervals.len() <= grid.k + 1, "basis {m}: {nz_intervals:?}");
        for w in nz_intervals.windows(2) {
            assert_eq!(w[1], w[0] + 1, "support of basis {m} not consecutive");
        }
    }
}

#[test]
fn order_zero_basis_is_interval_indicator() {
    let grid = SplineGrid::new(5, 0, 0.0, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let x = rng.gen_range(0.0..5.0);
        let basis = bspline_basis(x, &grid);
        // Brute-force piecewise-constant oracle.
        let expected: Vec<f64> = (0..5)
            .map(|j| {
                let lo = grid.knots[j];
                let hi = grid.knots[j + 1];
                if (x >= lo && x < hi) || (j == 4 && x >= hi) { 1.0 } else { 0.0 }
            })
            .collect();
        assert_eq!(basis, expected, "x = {x}");
    }
}

#[test]
fn graph_basis_matches_numeric_basis() {
    let grid = SplineGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let mut g = Graph::new();
    let x = g.input(0);
    let nodes = bspline_basis_graph(&mut g, x, &grid);
    let ev = g.evaluate(&NoParams, &[&xs]).unwrap();
    for (i, &xv) in xs.iter().enumerate() {
        let num = bspline_basis(xv, &grid);
        for (m, &node) in nodes.iter().enumerate() {
            assert!(
                (ev.value(node)[i] - num[m]).abs() < 1e-12,
                "basis {m} at {xv}"
            );
        }
    }
}

#[test]
fn zero_activation_is_zero() {
    let act = SplineActivation::zero(SplineGrid::default());
    for x in linspace(-1.0, 1.0, 17) {
        assert_eq!(act.forward(x), 0.0);
    }
}

#[test]
fn silu_base_term_vanishes_at_origin() {
    let mut act = SplineActivation::zero(SplineGrid::default());
    act.w_b = 1.0;
    act.w_s = 0.0;
    assert_eq!(act.forward(0.0), 0.0);
}

#[test]
fn fitted_activation_interpolates_identity() {
    let act = SplineActivation::fit(SplineGrid::default(), |x| x);
    for x in linspace(-0.95, 0.95, 50) {
        assert!((act.forward(x) - x).abs() < 1e-3, "at {x}");
    }
}

#[test]
fn spline_derivative_matches_finite_differences() {
    let grid = SplineGrid::default();
    let coef: Vec<f64> = (0..grid.n_coef()).map(|m| ((m * 7 + 3) % 11) as f64 / 5.0 - 1.0).collect();
    let act = SplineActivation { grid: grid.clone(), coef: coef.clone(), w_b: 0.0, w_s: 1.0 };

    let mut g = Graph::new();
    let x = g.input(0);
    let basis = bspline_basis_graph(&mut g, x, &grid);
    let mut acc = None;
    for (m, &bm) in basis.iter().enumerate() {
        let c = g.constant(coef[m]);
        let term = g.mul(c, bm);
        acc = Some(g.add_scaled(acc, term));
    }
    let spline = acc.unwrap();
    let d = grad_graph(&mut g, spline, &[x])[0];

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    for _ in 0..100 {
        let xv = rng.gen_range(-0.99..0.99);
        let got = g.evaluate(&NoParams, &[&[xv]]).unwrap().scalar(d);
        let fd = (act.spline_value(xv + h) - act.spline_value(xv - h)) / (2.0 * h);
        let rel = (got - fd).abs() / fd.abs().max(1.0);
        assert!(rel < 1e-4, "at {xv}: {got} vs {fd}");
    }
}

#[test]
fn update_grid_is_fixed_point_on_spanning_samples() {
    let act = SplineActivation::fit(SplineGrid::default(), |x| x.sin());
    // 1st/99th percentiles land exactly on the current range endpoints.
    let mut samples = linspace(-1.0, 1.0, 201);
    samples[1] = -1.0;
    samples[2] = -1.0;
    samples[198] = 1.0;
    samples[199] = 1.0;
    let updated = act.update_grid(&samples);
    for (a, b) in act.grid.knots.iter().zip(&updated.grid.knots) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn update_grid_keeps_zero_activation_zero() {
    let act = SplineActivation::zero(SplineGrid::default());
    let updated = act.update_grid(&linspace(-3.0, 2.0, 100));
    for x in linspace(-3.0, 2.0, 33) {
        assert_eq!(updated.forward(x), 0.0);
    }
}

#[test]
fn update_grid_on_degenerate_samples_is_identity() {
    let act = SplineActivation::fit(SplineGrid::default(), |x| x * x);
    let updated = act.update_grid(&vec![0.7; 50]);
    assert_eq!(act, updated);
}

#[test]
fn update_grid_preserves_fitted_square() {
    let act = SplineActivation::fit(SplineGrid::default(), |x| x * x);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<f64> = (0..2000).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let updated = act.update_grid(&samples);
    assert!(updated.grid.hi > 1.5, "grid should widen: {:?}", updated.grid);
    let xs = linspace(-1.0, 1.0, 200);
    let rms = (xs.iter().map(|&x| (updated.forward(x) - x * x).powi(2)).sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    assert!(rms < 1e-4, "rms {rms}");
}

#[test]
fn partition_of_unity_survives_grid_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = SplineGrid::default();
    for _ in 0..20 {
        let lo = rng.gen_range(-5.0..0.0);
        let hi = lo + rng.gen_range(0.5..6.0);
        let samples: Vec<f64> = (0..300).map(|_| rng.gen_range(lo..hi)).collect();
        let grid = base.from_samples(&samples).unwrap();
        for _ in 0..50 {
            let x = rng.gen_range(grid.lo..grid.hi);
            let s: f64 = bspline_basis(x, &grid).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "sum {s} at {x} on {grid:?}");
        }
    }
}

#[test]
fn snap_recovers_sine_from_fitted_activation() {
    use std::f64::consts::PI;
    let act = SplineActivation::fit(SplineGrid::new(5, 3, -PI, PI), |x| x.sin());
    let xs = linspace(-PI, PI, 64);
    let ys: Vec<f64> = xs.iter().map(|&x| act.forward(x)).collect();
    let snap = snap_to_symbolic(&xs, &ys, -PI, PI);
    assert_eq!(snap.name, "sin");
    assert!(snap.r2 > 0.99, "r2 {}", snap.r2);
}

#[test]
fn snap_recovers_exponential_from_fitted_activation() {
    let act = SplineActivation::fit(SplineGrid::new(5, 3, 0.0, 2.0), |x| x.exp());
    let xs = linspace(0.0, 2.0, 64);
    let ys: Vec<f64> = xs.iter().map(|&x| act.forward(x)).collect();
    let snap = snap_to_symbolic(&xs, &ys, 0.0, 2.0);
    assert_eq!(snap.name, "exp");
    assert!(snap.r2 > 0.99, "r2 {}", snap.r2);
}

#[test]
fn snap_constant_activation() {
    let xs = linspace(-1.0, 1.0, 64);
    let ys = vec![1.7; 64];
    let snap = snap_to_symbolic(&xs, &ys, -1.0, 1.0);
    assert_eq!(snap.name, "constant");
    assert_eq!(snap.r2, 1.0);
    assert!((snap.eval(0.3) - 1.7).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Snapping an activation synthesized from a library entry recovers
    /// that entry (sin and cos are interchangeable under the phase shift
    /// the affine search is allowed to use).
    #[test]
    fn snap_recovers_library_entries(
        entry in 0usize..10,
        a in 0.5f64..2.0,
        c in 0.5f64..2.0,
    ) {
        let name = LIBRARY[entry];
        // Positive-only entries probe a positive range; |x| needs a sign
        // change to be distinguishable from x.
        let (lo, hi) = match name {
            "sqrt" | "ln" | "1/x" => (0.5, 3.0),
            "sin" | "cos" => (-3.0, 3.0),
            _ => (-1.0, 1.0),
        };
        let xs = linspace(lo, hi, 64);
        let ys: Vec<f64> = xs.iter().map(|&x| c * apply_named(name, a * x)).collect();
        let snap = snap_to_symbolic(&xs, &ys, lo, hi);
        let ok = snap.name == name
            || (name == "sin" && snap.name == "cos")
            || (name == "cos" && snap.name == "sin");
        prop_assert!(ok, "{name} (a={a}, c={c}) snapped to {} (r2 {})", snap.name, snap.r2);
        prop_assert!(snap.r2 > 0.95, "{name}: r2 {}", snap.r2);
    }

    /// Percentile regridding always yields a partition of unity inside the
    /// new range.
    #[test]
    fn regrid_partition_of_unity(
        mut samples in proptest::collection::vec(-10.0f64..10.0, 10..60),
        t in 0.0f64..1.0,
    ) {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Some(grid) = SplineGrid::default().from_samples(&samples) {
            let x = grid.lo + t * (grid.hi - grid.lo) * 0.999;
            let s: f64 = bspline_basis(x, &grid).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12, "sum {s} at {x}");
        }
    }
}

#[test]
fn two_input_model_has_fifteen_activations() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = KanModel::new(2, 5, &mut rng);
    assert_eq!(model.core.n_activations(), 15);
    // 8 spline coefficients + 2 weights per activation.
    assert_eq!(model.store.n_parameters(), 15 * (8 + 2));
}

#[test]
fn zero_network_outputs_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut model = KanModel::new(2, 5, &mut rng);
    let names: Vec<String> = model.store.names().cloned().collect();
    for name in names {
        if name.ends_with(".c") || name.ends_with(".wb") {
            for v in model.store.get_mut(&name).unwrap() {
                *v = 0.0;
            }
        }
    }
    let out = predict(&model, &[vec![0.3, -0.7, 2.0], vec![0.1, 0.9, -1.5]]).unwrap();
    assert_eq!(out, vec![0.0, 0.0, 0.0]);
}

#[test]
fn identity_chain_passes_input_through() {
    let core = KanCore::new(vec![1, 1], "id");
    let mut store = ParameterStore::new();
    let grid = &core.grids[0][0];
    store.insert("id.l0.e0_0.c", fit_coefficients(grid, &|x| x));
    store.insert("id.l0.e0_0.wb", vec![0.0]);
    store.insert("id.l0.e0_0.ws", vec![1.0]);
    let mut g = Graph::new();
    let x = g.input(0);
    let out = core.build(&mut g, &[x]);
    let xs = linspace(-0.9, 0.9, 25);
    let ev = g.evaluate(&store, &[&xs]).unwrap();
    for (i, &xv) in xs.iter().enumerate() {
        assert!((ev.value(out)[i] - xv).abs() < 1e-3, "at {xv}");
    }
}

#[test]
fn forward_rejects_wrong_input_dim() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = KanModel::new(2, 5, &mut rng);
    assert!(predict(&model, &[vec![1.0]]).is_err());
}

#[test]
fn training_reduces_loss_and_updates_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 200;
    let x1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    let x2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
    let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
    let mut model = KanModel::new(2, 5, &mut rng);
    model.fit_normalizer(&[x1.clone(), x2.clone()]);
    let cfg = TrainConfig { max_steps: 400, ..TrainConfig::default() };
    let log = train_supervised(&mut model, &[x1, x2], &y, &cfg).unwrap();
    let first = log.loss_history[0];
    let last = *log.loss_history.last().unwrap();
    assert!(last < first * 0.1, "loss {first} -> {last}");
}

#[test]
fn extraction_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = KanModel::new(2, 5, &mut rng);
    let a = model.extract_equation().unwrap().render();
    let b = model.extract_equation().unwrap().render();
    assert_eq!(a, b);
}
