use serde::{Deserialize, Serialize};

use crate::expr::{apply_named, SymbolicExpr};
use crate::util::{linspace, lstsq, round_sig};

/// Candidate univariate functions a learned activation can snap to, in
/// fixed search order (ties resolve to the earlier entry).
pub const LIBRARY: [&str; 12] = [
    "x", "x^2", "x^3", "1/x", "sqrt", "sin", "cos", "tanh", "exp", "ln", "|x|", "constant",
];

/// Best affine match `c·f(a·x + b) + d` of a library entry against sampled
/// activation values, with its goodness of fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub r2: f64,
}

impl Snap {
    pub fn eval(&self, x: f64) -> f64 {
        self.c * apply_named(&self.name, self.a * x + self.b) + self.d
    }

    /// Symbolic form with coefficients rounded to 4 significant digits.
    /// Near-zero pieces fold away through the expression constructors.
    pub fn expr(&self, arg: SymbolicExpr) -> SymbolicExpr {
        let r = |v: f64| round_sig(v, 4);
        let chop = |v: f64| if v.abs() < 1e-4 { 0.0 } else { r(v) };
        let c = chop(self.c);
        let d = chop(self.d);
        if c == 0.0 || self.name == "constant" {
            let k = if self.name == "constant" { r(self.c + self.d) } else { d };
            return SymbolicExpr::constant(k);
        }
        let inner = SymbolicExpr::affine(arg, r(self.a), chop(self.b));
        let f = match self.name.as_str() {
            "x" => inner,
            "x^2" => SymbolicExpr::pow(inner, 2.0),
            "x^3" => SymbolicExpr::pow(inner, 3.0),
            "1/x" => SymbolicExpr::pow(inner, -1.0),
            "sqrt" => SymbolicExpr::pow(inner, 0.5),
            "|x|" => SymbolicExpr::func("abs", inner),
            name => SymbolicExpr::func(name, inner),
        };
        let scaled = SymbolicExpr::product(vec![SymbolicExpr::constant(c), f]);
        SymbolicExpr::sum(vec![scaled, SymbolicExpr::constant(d)])
    }
}

fn fit_cd(f_vals: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = ys.len();
    let mut design = Vec::with_capacity(2 * n);
    for &f in f_vals {
        design.push(f);
        design.push(1.0);
    }
    let sol = lstsq(&design, ys, n, 2);
    (sol[0], sol[1])
}

fn r_squared_of(fit: impl Fn(f64) -> f64, xs: &[f64], ys: &[f64], mean: f64, ss_tot: f64) -> f64 {
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - fit(x);
            e * e
        })
        .sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ys.iter().all(|&y| (y - mean).abs() < 1e-12) {
        1.0
    } else {
        0.0
    }
}

/// Scales for the `a` search: ±21 log-spaced magnitudes in [0.2, 5].
fn a_candidates() -> Vec<f64> {
    let mags = linspace(0.2f64.ln(), 5.0f64.ln(), 21);
    let mut out = Vec::with_capacity(42);
    for &m in &mags {
        out.push(m.exp());
    }
    for &m in &mags {
        out.push(-m.exp());
    }
    out
}

fn score(name: &str, a: f64, b: f64, xs: &[f64], ys: &[f64], mean: f64, ss_tot: f64) -> Option<Snap> {
    let f_vals: Vec<f64> = xs.iter().map(|&x| apply_named(name, a * x + b)).collect();
    if f_vals.iter().any(|v| !v.is_finite() || v.abs() > 1e8) {
        return None;
    }
    let (c, d) = fit_cd(&f_vals, ys);
    if !c.is_finite() || !d.is_finite() {
        return None;
    }
    let r2 = r_squared_of(
        |x| c * apply_named(name, a * x + b) + d,
        xs,
        ys,
        mean,
        ss_tot,
    );
    if !r2.is_finite() {
        return None;
    }
    Some(Snap { name: name.to_string(), a, b, c, d, r2 })
}

/// Matches sampled activation values against every library entry over a
/// coarse affine grid (a log-spaced, b spanning the probe range), refines
/// the winner locally, and returns the best `c·f(a·x + b) + d` by R².
///
/// Constant targets snap to "constant" exactly; entries undefined for every
/// probed (a, b) are skipped, so an activation nothing can fit also falls
/// back to "constant".
pub fn snap_to_symbolic(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Snap {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 20, "need at least 20 probe points");
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|&y| (y - mean) * (y - mean)).sum();

    let degenerate = ss_tot <= 1e-24 * n;
    let fallback = Snap {
        name: "constant".into(),
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: mean,
        r2: if degenerate { 1.0 } else { 0.0 },
    };
    if degenerate {
        return fallback;
    }

    let a_grid = a_candidates();
    let b_grid = linspace(lo, hi, 21);
    let mut best = fallback;
    for name in LIBRARY {
        if name == "constant" {
            continue;
        }
        let affine_free = name == "x"; // affine params are redundant for identity
        let mut local: Option<Snap> = None;
        if affine_free {
            local = score(name, 1.0, 0.0, xs, ys, mean, ss_tot);
        } else {
            for &a in &a_grid {
                for &b in &b_grid {
                    if let Some(s) = score(name, a, b, xs, ys, mean, ss_tot) {
                        if local.as_ref().map_or(true, |l| s.r2 > l.r2) {
                            local = Some(s);
                        }
                    }
                }
            }
            // Local refinement: shrink the affine search box around the
            // coarse winner a few times.
            if let Some(seed) = local.clone() {
                let mut center = seed;
                let mut a_step = (5.0f64 / 0.2).ln() / 20.0;
                let mut b_step = (hi - lo) / 20.0;
                for _ in 0..4 {
                    a_step /= 3.0;
                    b_step /= 3.0;
                    for da in [-1.0, 0.0, 1.0] {
                        for db in [-1.0, 0.0, 1.0] {
                            let a = center.a * (da * a_step).exp();
                            let b = center.b + db * b_step;
                            if let Some(s) = score(name, a, b, xs, ys, mean, ss_tot) {
                                if s.r2 > center.r2 {
                                    center = s;
                                }
                            }
                        }
                    }
                }
                local = Some(center);
            }
        }
        if let Some(s) = local {
            if s.r2 > best.r2 {
                best = s;
            }
        }
    }
    best
}
