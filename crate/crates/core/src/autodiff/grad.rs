//! Reverse-mode differentiation that builds gradient *graphs*.
//!
//! The returned gradients are ordinary nodes, so calling `grad_graph` on
//! them again yields higher derivatives. This is how PDE residuals that
//! already contain second input derivatives remain differentiable with
//! respect to network parameters.

use super::graph::{Graph, NodeId, Op, LN_CLAMP};

/// Builds gradient nodes of `output` with respect to each node in `wrt`.
///
/// Nodes unreachable from `output` get the constant-zero node. The graph is
/// only appended to; existing nodes are never mutated.
pub fn grad_graph(g: &mut Graph, output: NodeId, wrt: &[NodeId]) -> Vec<NodeId> {
    let upto = output.index();
    let mut adj: Vec<Option<NodeId>> = vec![None; upto + 1];
    let one = g.constant(1.0);
    adj[upto] = Some(one);

    let accumulate = |g: &mut Graph, adj: &mut Vec<Option<NodeId>>, id: NodeId, c: NodeId| {
        if id.index() <= upto {
            adj[id.index()] = Some(match adj[id.index()] {
                Some(prev) => g.add(prev, c),
                None => c,
            });
        }
    };

    for i in (0..=upto).rev() {
        let Some(gi) = adj[i] else { continue };
        if g.as_const(gi) == Some(0.0) {
            continue;
        }
        let node = NodeId(i as u32);
        match g.op(node) {
            Op::Const(_) | Op::Input(_) | Op::Param(_) | Op::GeMask(..) => {}
            Op::Add(a, b) => {
                accumulate(g, &mut adj, a, gi);
                accumulate(g, &mut adj, b, gi);
            }
            Op::Sub(a, b) => {
                accumulate(g, &mut adj, a, gi);
                let nb = g.neg(gi);
                accumulate(g, &mut adj, b, nb);
            }
            Op::Mul(a, b) => {
                let ca = g.mul(gi, b);
                accumulate(g, &mut adj, a, ca);
                let cb = g.mul(gi, a);
                accumulate(g, &mut adj, b, cb);
            }
            Op::Div(a, b) => {
                let ca = g.div(gi, b);
                accumulate(g, &mut adj, a, ca);
                let b2 = g.mul(b, b);
                let ga = g.mul(gi, a);
                let frac = g.div(ga, b2);
                let cb = g.neg(frac);
                accumulate(g, &mut adj, b, cb);
            }
            Op::Neg(a) => {
                let c = g.neg(gi);
                accumulate(g, &mut adj, a, c);
            }
            Op::Exp(a) => {
                let c = g.mul(gi, node);
                accumulate(g, &mut adj, a, c);
            }
            Op::Ln(a) => {
                // Matches the forward clamp: d/dx ln(max(x, eps)) = 1/max(x, eps).
                let eps = g.constant(LN_CLAMP);
                let clamped = g.max(a, eps);
                let c = g.div(gi, clamped);
                accumulate(g, &mut adj, a, c);
            }
            Op::Sin(a) => {
                let ca = g.cos(a);
                let c = g.mul(gi, ca);
                accumulate(g, &mut adj, a, c);
            }
            Op::Cos(a) => {
                let sa = g.sin(a);
                let m = g.mul(gi, sa);
                let c = g.neg(m);
                accumulate(g, &mut adj, a, c);
            }
            Op::Tanh(a) => {
                let sq = g.mul(node, node);
                let one = g.constant(1.0);
                let d = g.sub(one, sq);
                let c = g.mul(gi, d);
                accumulate(g, &mut adj, a, c);
            }
            Op::Sigmoid(a) => {
                let one = g.constant(1.0);
                let d = g.sub(one, node);
                let sd = g.mul(node, d);
                let c = g.mul(gi, sd);
                accumulate(g, &mut adj, a, c);
            }
            Op::Max(a, b) => {
                let mask = g.ge_mask(a, b);
                let ca = g.mul(gi, mask);
                accumulate(g, &mut adj, a, ca);
                let one = g.constant(1.0);
                let inv = g.sub(one, mask);
                let cb = g.mul(gi, inv);
                accumulate(g, &mut adj, b, cb);
            }
        }
    }

    wrt.iter()
        .map(|w| {
            if w.index() <= upto {
                adj[w.index()].unwrap_or_else(|| g.constant(0.0))
            } else {
                g.constant(0.0)
            }
        })
        .collect()
}
