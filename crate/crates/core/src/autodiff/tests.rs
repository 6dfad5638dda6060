use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn eval1(g: &Graph, node: NodeId, cols: &[&[f64]]) -> f64 {
    g.evaluate(&NoParams, cols).unwrap().scalar(node)
}

#[test]
fn evaluate_square() {
    let mut g = Graph::new();
    let x = g.input(0);
    let y = g.mul(x, x);
    assert_eq!(eval1(&g, y, &[&[3.0]]), 9.0);
}

#[test]
fn evaluate_exp_ln_inverse_pair() {
    let mut g = Graph::new();
    let x = g.input(0);
    let l = g.ln(x);
    let y = g.exp(l);
    assert!((eval1(&g, y, &[&[2.5]]) - 2.5).abs() < 1e-12);
}

#[test]
fn evaluate_burgers_true_solution_point() {
    // (2x+1)/(2t+1) at x=1, t=0.5
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let two = g.constant(2.0);
    let one = g.constant(1.0);
    let num = {
        let m = g.mul(two, x);
        g.add(m, one)
    };
    let den = {
        let m = g.mul(two, t);
        g.add(m, one)
    };
    let y = g.div(num, den);
    assert!((eval1(&g, y, &[&[1.0], &[0.5]]) - 1.5).abs() < 1e-12);
}

#[test]
fn evaluate_unbound_input_is_error() {
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let _ = g.add(x, t);
    let r = g.evaluate(&NoParams, &[&[1.0]]);
    assert!(matches!(r, Err(Error::UnboundInput(_))));
}

#[test]
fn evaluate_nonfinite_identifies_node() {
    let mut g = Graph::new();
    let x = g.input(0);
    let zero = g.constant(0.0);
    let bad = g.div(x, zero);
    let r = g.evaluate(&NoParams, &[&[1.0]]);
    match r {
        Err(Error::NonFinite { node, op }) => {
            assert_eq!(node, bad.index());
            assert_eq!(op, "div");
        }
        Err(other) => panic!("expected NonFinite, got {other:?}"),
        Ok(_) => panic!("expected NonFinite, got Ok"),
    }
}

#[test]
fn grad_power_rule() {
    let mut g = Graph::new();
    let x = g.input(0);
    let y = g.mul(x, x);
    let dx = grad_graph(&mut g, y, &[x])[0];
    assert_eq!(eval1(&g, dx, &[&[3.0]]), 6.0);
}

#[test]
fn second_derivative_of_sin_at_zero() {
    let mut g = Graph::new();
    let x = g.input(0);
    let y = g.sin(x);
    let d1 = grad_graph(&mut g, y, &[x])[0];
    let d2 = grad_graph(&mut g, d1, &[x])[0];
    assert!(eval1(&g, d2, &[&[0.0]]).abs() < 1e-15);
}

#[test]
fn second_time_derivative_of_wave_solution() {
    // d²/dt² of sin(x)·sin(t) at (π/2, π/2) = -1
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let sx = g.sin(x);
    let st = g.sin(t);
    let u = g.mul(sx, st);
    let ut = grad_graph(&mut g, u, &[t])[0];
    let utt = grad_graph(&mut g, ut, &[t])[0];
    let pi2 = std::f64::consts::FRAC_PI_2;
    assert!((eval1(&g, utt, &[&[pi2], &[pi2]]) + 1.0).abs() < 1e-12);
}

#[test]
fn grad_of_unreachable_node_is_zero() {
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let y = g.mul(x, x);
    let dt = grad_graph(&mut g, y, &[t])[0];
    assert_eq!(g.as_const(dt), Some(0.0));
}

#[test]
fn check_gradient_bilinear() {
    let err = check_gradient(
        |g, xs| g.mul(xs[0], xs[1]),
        &[2.0, 3.0],
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn check_gradient_exp() {
    let err = check_gradient(|g, xs| g.exp(xs[0]), &[1.0], 1e-5).unwrap();
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn check_gradient_ln() {
    let err = check_gradient(|g, xs| g.ln(xs[0]), &[0.5], 1e-6).unwrap();
    assert!(err < 1e-5, "relative error {err}");
}

/// Reverse-mode gradients of every primitive match central finite
/// differences over 100 random points (domains restricted where needed).
#[test]
fn primitives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    type Builder = fn(&mut Graph, &[NodeId]) -> NodeId;
    let unary_any: [(&str, Builder); 6] = [
        ("exp", |g, xs| g.exp(xs[0])),
        ("sin", |g, xs| g.sin(xs[0])),
        ("cos", |g, xs| g.cos(xs[0])),
        ("tanh", |g, xs| g.tanh(xs[0])),
        ("sigmoid", |g, xs| g.sigmoid(xs[0])),
        ("neg", |g, xs| g.neg(xs[0])),
    ];
    for (name, f) in unary_any {
        for _ in 0..100 {
            let x = rng.gen_range(-2.0..2.0);
            let err = check_gradient(f, &[x], 1e-5).unwrap();
            assert!(err < 1e-4, "{name} at {x}: {err}");
        }
    }
    // ln and pow need positive arguments away from the clamp.
    for _ in 0..100 {
        let x = rng.gen_range(0.1..5.0);
        let err = check_gradient(|g, xs| g.ln(xs[0]), &[x], 1e-6).unwrap();
        assert!(err < 1e-4, "ln at {x}: {err}");
        let w = rng.gen_range(-3.0..3.0);
        let err = check_gradient(
            move |g, xs| {
                let e = g.constant(w);
                g.pow(xs[0], e)
            },
            &[x],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "pow({x}, {w}): {err}");
    }
    // Binary ops; div keeps the denominator away from zero.
    for _ in 0..100 {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(0.5..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        for (name, f) in [
            ("add", (|g, xs| g.add(xs[0], xs[1])) as Builder),
            ("sub", |g, xs| g.sub(xs[0], xs[1])),
            ("mul", |g, xs| g.mul(xs[0], xs[1])),
            ("div", |g, xs| g.div(xs[0], xs[1])),
            ("max", |g, xs| g.max(xs[0], xs[1])),
        ] {
            // max is non-differentiable on the diagonal; resample nearby ties.
            if name == "max" && (a - b).abs() < 1e-3 {
                continue;
            }
            let err = check_gradient(f, &[a, b], 1e-6).unwrap();
            assert!(err < 1e-4, "{name} at ({a}, {b}): {err}");
        }
    }
}

/// grad-of-grad equals the analytic second derivative.
#[test]
fn second_derivatives_are_analytic() {
    let cases: Vec<(
        &str,
        fn(&mut Graph, &[NodeId]) -> NodeId,
        fn(f64) -> f64,
    )> = vec![
        (
            "x^3",
            |g, xs| {
                let sq = g.mul(xs[0], xs[0]);
                g.mul(sq, xs[0])
            },
            |x| 6.0 * x,
        ),
        ("sin", |g, xs| g.sin(xs[0]), |x| -x.sin()),
        ("exp", |g, xs| g.exp(xs[0]), |x| x.exp()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, f, exact) in cases {
        for _ in 0..20 {
            let x = rng.gen_range(-1.5..1.5);
            let mut g = Graph::new();
            let xs = [g.input(0)];
            let y = f(&mut g, &xs);
            let d1 = grad_graph(&mut g, y, &xs)[0];
            let d2 = grad_graph(&mut g, d1, &xs)[0];
            let got = eval1(&g, d2, &[&[x]]);
            let want = exact(x);
            let rel = (got - want).abs() / want.abs().max(1.0);
            assert!(rel < 1e-6, "{name}'' at {x}: {got} vs {want}");
        }
    }
    // Mixed second derivative of x*t is 1 everywhere.
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let y = g.mul(x, t);
    let dx = grad_graph(&mut g, y, &[x])[0];
    let dxt = grad_graph(&mut g, dx, &[t])[0];
    assert_eq!(eval1(&g, dxt, &[&[1.7], &[-0.3]]), 1.0);
}

/// grad(a·f + b·g) = a·grad(f) + b·grad(g), to floating-point rounding.
#[test]
fn gradient_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let a = rng.gen_range(-2.0..2.0);
        let b = rng.gen_range(-2.0..2.0);
        let x0 = rng.gen_range(0.2..2.0);

        // f = sin(x), g = x², combined inside one graph.
        let mut g = Graph::new();
        let x = g.input(0);
        let f = g.sin(x);
        let h = g.mul(x, x);
        let ca = g.constant(a);
        let cb = g.constant(b);
        let af = g.mul(ca, f);
        let bh = g.mul(cb, h);
        let combo = g.add(af, bh);
        let d_combo = grad_graph(&mut g, combo, &[x])[0];
        let d_f = grad_graph(&mut g, f, &[x])[0];
        let d_h = grad_graph(&mut g, h, &[x])[0];
        let ev = g.evaluate(&NoParams, &[&[x0]]).unwrap();
        let lhs = ev.scalar(d_combo);
        let rhs = a * ev.scalar(d_f) + b * ev.scalar(d_h);
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn evaluation_is_deterministic_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(0.1..4.0)).collect();
    let build = || {
        let mut g = Graph::new();
        let x = g.input(0);
        let l = g.ln(x);
        let s = g.sin(l);
        let e = g.exp(s);
        let t = g.tanh(e);
        (g, t)
    };
    let (g1, n1) = build();
    let (g2, n2) = build();
    let v1 = g1.evaluate(&NoParams, &[&xs]).unwrap().value(n1).to_vec();
    let v2 = g2.evaluate(&NoParams, &[&xs]).unwrap().value(n2).to_vec();
    assert_eq!(
        v1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        v2.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn numeric_grad_values_match_graph_gradients() {
    let mut g = Graph::new();
    let x = g.input(0);
    let t = g.input(1);
    let st = g.sin(t);
    let y = g.mul(x, st);
    let sym = grad_graph(&mut g, y, &[x, t]);
    let xs = [0.5, 1.5, 2.5];
    let ts = [0.1, 0.7, 1.3];
    let ev = g.evaluate(&NoParams, &[&xs, &ts]).unwrap();
    let num = g.grad_values(&NoParams, &[&xs, &ts], y, &[x, t]).unwrap();
    for k in 0..3 {
        assert!((ev.value(sym[0])[k] - num[0][k]).abs() < 1e-14);
        assert!((ev.value(sym[1])[k] - num[1][k]).abs() < 1e-14);
    }
}

/// ln clamps its argument, so gradients stay finite near zero.
#[test]
fn ln_clamp_keeps_gradients_finite() {
    let mut g = Graph::new();
    let x = g.input(0);
    let y = g.ln(x);
    let d = grad_graph(&mut g, y, &[x])[0];
    let ev = g.evaluate_lenient(&NoParams, &[&[0.0]], 1).unwrap();
    assert!(ev.value(y)[0].is_finite());
    assert!(ev.value(d)[0].is_finite());
}
