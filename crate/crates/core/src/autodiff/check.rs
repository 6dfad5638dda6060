//! Finite-difference gradient oracle.

use super::exec::NoParams;
use super::grad::grad_graph;
use super::graph::{Graph, NodeId};
use crate::error::Result;

/// Compares the reverse-mode gradient of `f` at `point` against central
/// finite differences `(f(x+eps) - f(x-eps)) / (2 eps)` per coordinate and
/// returns the maximum relative error.
///
/// `f` builds the scalar output from one input node per coordinate.
pub fn check_gradient<F>(f: F, point: &[f64], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> NodeId,
{
    let mut g = Graph::new();
    let xs: Vec<NodeId> = (0..point.len()).map(|i| g.input(i)).collect();
    let y = f(&mut g, &xs);
    let grads = grad_graph(&mut g, y, &xs);

    let cols: Vec<Vec<f64>> = point.iter().map(|&v| vec![v]).collect();
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let ev = g.evaluate(&NoParams, &refs)?;

    let eval_at = |p: &[f64]| -> Result<f64> {
        let mut g2 = Graph::new();
        let xs2: Vec<NodeId> = (0..p.len()).map(|i| g2.input(i)).collect();
        let y2 = f(&mut g2, &xs2);
        let cols: Vec<Vec<f64>> = p.iter().map(|&v| vec![v]).collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        Ok(g2.evaluate(&NoParams, &refs)?.scalar(y2))
    };

    let mut worst: f64 = 0.0;
    for (i, &gnode) in grads.iter().enumerate() {
        let ad = ev.scalar(gnode);
        let mut plus = point.to_vec();
        plus[i] += eps;
        let mut minus = point.to_vec();
        minus[i] -= eps;
        let fd = (eval_at(&plus)? - eval_at(&minus)?) / (2.0 * eps);
        worst = worst.max(rel_err(ad, fd));
    }
    Ok(worst)
}

/// Relative error with an absolute floor so near-zero references do not
/// blow the ratio up.
pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Runs [`check_gradient`] over many points and returns the worst error.
pub fn check_gradient_multi<F>(f: F, points: &[Vec<f64>], eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> NodeId + Copy,
{
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max(check_gradient(f, p, eps)?);
    }
    Ok(worst)
}
