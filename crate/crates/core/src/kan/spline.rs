use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId};
use crate::util::{linspace, lstsq, percentile};

/// Uniform B-spline knot grid: `g` interior intervals of order-`k` pieces
/// over [lo, hi], with the knot vector extended `k` steps past both ends so
/// every interior point sees a full set of basis functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineGrid {
    pub g: usize,
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub knots: Vec<f64>,
}

impl SplineGrid {
    pub fn new(g: usize, k: usize, lo: f64, hi: f64) -> Self {
        assert!(g >= 1 && hi > lo, "grid needs g >= 1 and hi > lo");
        let h = (hi - lo) / g as f64;
        let knots = (0..g + 2 * k + 1)
            .map(|i| lo + (i as f64 - k as f64) * h)
            .collect();
        SplineGrid { g, k, lo, hi, knots }
    }

    pub fn n_coef(&self) -> usize {
        self.g + self.k
    }

    /// Regrids to the 1st..99th percentile span of `samples`, keeping g and
    /// k. Returns `None` when the span is degenerate (all samples equal).
    pub fn from_samples(&self, samples: &[f64]) -> Option<SplineGrid> {
        if samples.len() < 2 {
            return None;
        }
        let lo = percentile(samples, 0.01);
        let hi = percentile(samples, 0.99);
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        Some(SplineGrid::new(self.g, self.k, lo, hi))
    }
}

impl Default for SplineGrid {
    fn default() -> Self {
        SplineGrid::new(5, 3, -1.0, 1.0)
    }
}

/// Order-k B-spline basis values at `x` (Cox–de Boor). Inside [lo, hi] the
/// values are a partition of unity; outside, the recursion is seeded with
/// open-ended boundary indicators, so each basis function continues as the
/// polynomial of its outermost piece instead of dropping to zero.
pub fn bspline_basis(x: f64, grid: &SplineGrid) -> Vec<f64> {
    let t = &grid.knots;
    let n_int = t.len() - 1;
    // Only interior intervals can fire, and the two boundary ones are
    // open-ended: out-of-range x is treated as lying in the boundary
    // interval, which makes the recursion evaluate each basis function's
    // boundary polynomial piece at x (the natural extension).
    let (first, last) = (grid.k, grid.k + grid.g - 1);
    let mut b: Vec<f64> = (0..n_int)
        .map(|j| {
            if j < first || j > last {
                return 0.0;
            }
            let left = j == first || x >= t[j];
            let right = j == last || x < t[j + 1];
            if left && right { 1.0 } else { 0.0 }
        })
        .collect();
    for ord in 1..=grid.k {
        for j in 0..n_int - ord {
            let d1 = t[j + ord] - t[j];
            let d2 = t[j + ord + 1] - t[j + 1];
            let mut v = 0.0;
            if d1 > 0.0 {
                v += (x - t[j]) / d1 * b[j];
            }
            if d2 > 0.0 {
                v += (t[j + ord + 1] - x) / d2 * b[j + 1];
            }
            b[j] = v;
        }
        b.truncate(n_int - ord);
    }
    b
}

/// Graph twin of [`bspline_basis`]: same recursion built from `ge_mask`
/// indicators and affine knot ratios, so spline outputs are differentiable
/// to any order through the standard rules.
pub fn bspline_basis_graph(g: &mut Graph, x: NodeId, grid: &SplineGrid) -> Vec<NodeId> {
    let t = &grid.knots;
    let n_int = t.len() - 1;
    let one = g.constant(1.0);
    let zero = g.constant(0.0);
    let (first, last) = (grid.k, grid.k + grid.g - 1);
    let mut b: Vec<NodeId> = (0..n_int)
        .map(|j| {
            if j < first || j > last {
                return zero;
            }
            let lo = if j == first {
                one
            } else {
                let kj = g.constant(t[j]);
                g.ge_mask(x, kj)
            };
            let hi = if j == last {
                one
            } else {
                let kj = g.constant(t[j + 1]);
                let m = g.ge_mask(x, kj);
                g.sub(one, m)
            };
            g.mul(lo, hi)
        })
        .collect();
    for ord in 1..=grid.k {
        for j in 0..n_int - ord {
            let d1 = t[j + ord] - t[j];
            let d2 = t[j + ord + 1] - t[j + 1];
            let mut acc = None;
            if d1 > 0.0 {
                let r = g.affine(x, 1.0 / d1, -t[j] / d1);
                let term = g.mul(r, b[j]);
                acc = Some(g.add_scaled(acc, term));
            }
            if d2 > 0.0 {
                let r = g.affine(x, -1.0 / d2, t[j + ord + 1] / d2);
                let term = g.mul(r, b[j + 1]);
                acc = Some(g.add_scaled(acc, term));
            }
            b[j] = acc.unwrap_or_else(|| g.constant(0.0));
        }
        b.truncate(n_int - ord);
    }
    b
}

/// One learnable edge activation: `w_b·silu(x) + w_s·Σ c_m·B_m(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineActivation {
    pub grid: SplineGrid,
    pub coef: Vec<f64>,
    pub w_b: f64,
    pub w_s: f64,
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

impl SplineActivation {
    pub fn zero(grid: SplineGrid) -> Self {
        let coef = vec![0.0; grid.n_coef()];
        SplineActivation { grid, coef, w_b: 0.0, w_s: 1.0 }
    }

    /// Least-squares fit of the spline part to `f` over the grid range,
    /// with the base term switched off (w_b = 0, w_s = 1).
    pub fn fit(grid: SplineGrid, f: impl Fn(f64) -> f64) -> Self {
        let coef = fit_coefficients(&grid, &f);
        SplineActivation { grid, coef, w_b: 0.0, w_s: 1.0 }
    }

    pub fn spline_value(&self, x: f64) -> f64 {
        bspline_basis(x, &self.grid)
            .iter()
            .zip(&self.coef)
            .map(|(b, c)| b * c)
            .sum()
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.w_b * silu(x) + self.w_s * self.spline_value(x)
    }

    /// Re-spreads the knots over the 1st..99th percentile of `samples` and
    /// re-fits the coefficients so the spline part is preserved on the new
    /// range. Degenerate samples leave the activation unchanged.
    pub fn update_grid(&self, samples: &[f64]) -> SplineActivation {
        let Some(grid) = self.grid.from_samples(samples) else {
            return self.clone();
        };
        let coef = fit_coefficients(&grid, &|x| self.spline_value(x));
        SplineActivation { grid, coef, w_b: self.w_b, w_s: self.w_s }
    }
}

/// Least-squares spline coefficients reproducing `f` at a dense set of
/// points across the grid range.
pub fn fit_coefficients(grid: &SplineGrid, f: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let m = grid.n_coef();
    let xs = linspace(grid.lo, grid.hi, 4 * m);
    let mut design = Vec::with_capacity(xs.len() * m);
    let mut target = Vec::with_capacity(xs.len());
    for &x in &xs {
        design.extend_from_slice(&bspline_basis(x, grid));
        target.push(f(x));
    }
    lstsq(&design, &target, xs.len(), m)
}
