//! Batched evaluation of computation graphs.
//!
//! Every node carries one value per sample point. The executor materializes
//! values chunk by chunk so large derivative graphs evaluated at thousands
//! of collocation points stay within a bounded memory footprint.

use super::graph::{Graph, NodeId, Op, LN_CLAMP};
use crate::error::{Error, Result};

/// Source of parameter values during evaluation. Implemented by the
/// training-side parameter store; graphs themselves stay value-free.
pub trait ParamValues {
    fn tensor(&self, name: &str) -> Option<&[f64]>;
}

/// Parameter source for graphs without trainable parameters.
pub struct NoParams;

impl ParamValues for NoParams {
    fn tensor(&self, _name: &str) -> Option<&[f64]> {
        None
    }
}

/// Target number of f64 cells per buffer; chunk length adapts to graph size.
const CHUNK_BUDGET: usize = 4_000_000;
const MIN_CHUNK: usize = 8;
const MAX_CHUNK: usize = 4096;

pub(crate) fn pick_chunk(n_nodes: usize, batch: usize) -> usize {
    let by_budget = (CHUNK_BUDGET / n_nodes.max(1)).clamp(MIN_CHUNK, MAX_CHUNK);
    by_budget.min(batch.max(1))
}

/// Reusable buffers for chunked forward/backward passes over one graph.
pub struct Executor {
    chunk: usize,
    values: Vec<f64>,
    adjoints: Vec<f64>,
    /// Resolved (tensor, index) per param node, cached per run.
    resolved: Vec<f64>,
}

/// Reads one chunk of per-node values after a forward pass.
impl Executor {
    pub fn new(graph: &Graph, batch: usize) -> Self {
        let chunk = pick_chunk(graph.len(), batch);
        Executor {
            chunk,
            values: vec![0.0; graph.len() * chunk],
            adjoints: Vec::new(),
            resolved: Vec::new(),
        }
    }

    pub fn chunk_len(&self) -> usize {
        self.chunk
    }

    fn resolve_params(&mut self, graph: &Graph, params: &dyn ParamValues) -> Result<()> {
        self.resolved.clear();
        for p in graph.params() {
            let t = params
                .tensor(&p.name)
                .ok_or_else(|| Error::UnknownParameter(p.name.clone()))?;
            let v = *t.get(p.index).ok_or_else(|| Error::ShapeMismatch {
                name: p.name.clone(),
                expected: p.index + 1,
                actual: t.len(),
            })?;
            self.resolved.push(v);
        }
        Ok(())
    }

    /// Forward pass over `inputs[slot][offset..offset+len]`.
    ///
    /// `len` must not exceed the executor chunk length.
    pub fn forward_chunk(
        &mut self,
        graph: &Graph,
        params: &dyn ParamValues,
        inputs: &[&[f64]],
        offset: usize,
        len: usize,
    ) -> Result<()> {
        debug_assert!(len <= self.chunk);
        self.resolve_params(graph, params)?;
        let chunk = self.chunk;
        if self.values.len() < graph.len() * chunk {
            self.values.resize(graph.len() * chunk, 0.0);
        }
        for (i, op) in graph.ops().iter().enumerate() {
            let (src, rest) = self.values.split_at_mut(i * chunk);
            let out = &mut rest[..len];
            let sl = |id: NodeId| &src[id.index() * chunk..id.index() * chunk + len];
            match *op {
                Op::Const(c) => out.fill(c),
                Op::Param(pid) => out.fill(self.resolved[pid as usize]),
                Op::Input(slot) => {
                    let col = inputs.get(slot).ok_or(Error::UnboundInput(slot))?;
                    if col.len() < offset + len {
                        return Err(Error::UnboundInput(slot));
                    }
                    out.copy_from_slice(&col[offset..offset + len]);
                }
                Op::Add(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = a[k] + b[k];
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = a[k] - b[k];
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = a[k] * b[k];
                    }
                }
                Op::Div(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = a[k] / b[k];
                    }
                }
                Op::Neg(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = -a[k];
                    }
                }
                Op::Exp(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = a[k].exp();
                    }
                }
                Op::Ln(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = a[k].max(LN_CLAMP).ln();
                    }
                }
                Op::Sin(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = a[k].sin();
                    }
                }
                Op::Cos(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = a[k].cos();
                    }
                }
                Op::Tanh(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = a[k].tanh();
                    }
                }
                Op::Sigmoid(a) => {
                    let a = sl(a);
                    for k in 0..len {
                        out[k] = 1.0 / (1.0 + (-a[k]).exp());
                    }
                }
                Op::Max(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = a[k].max(b[k]);
                    }
                }
                Op::GeMask(a, b) => {
                    let (a, b) = (sl(a), sl(b));
                    for k in 0..len {
                        out[k] = if a[k] >= b[k] { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        Ok(())
    }

    /// Values of `node` for the chunk evaluated by the last forward pass.
    pub fn chunk_values(&self, node: NodeId, len: usize) -> &[f64] {
        &self.values[node.index() * self.chunk..node.index() * self.chunk + len]
    }

    /// Numeric reverse pass. Seeds the adjoint of `output` with `seed` for
    /// every element of the chunk and accumulates parameter gradients into
    /// `grads` (indexed like [`Graph::params`]).
    pub fn backward_chunk(
        &mut self,
        graph: &Graph,
        output: NodeId,
        seed: f64,
        len: usize,
        grads: &mut [f64],
    ) {
        debug_assert_eq!(grads.len(), graph.params().len());
        let chunk = self.chunk;
        self.adjoints.clear();
        self.adjoints.resize(graph.len() * chunk, 0.0);
        for v in
            self.adjoints[output.index() * chunk..output.index() * chunk + len].iter_mut()
        {
            *v = seed;
        }
        for i in (0..=output.index()).rev() {
            let (pre, rest) = self.adjoints.split_at_mut(i * chunk);
            let g = &rest[..len];
            // Skip nodes with all-zero adjoints cheaply.
            if g.iter().all(|&x| x == 0.0) {
                continue;
            }
            let vals = &self.values;
            let val = |id: NodeId| &vals[id.index() * chunk..id.index() * chunk + len];
            let acc = |pre: &mut [f64], id: NodeId, f: &mut dyn FnMut(usize) -> f64| {
                let dst = &mut pre[id.index() * chunk..id.index() * chunk + len];
                for k in 0..len {
                    dst[k] += f(k);
                }
            };
            match graph.op(NodeId(i as u32)) {
                Op::Const(_) | Op::Input(_) => {}
                Op::Param(pid) => {
                    grads[pid as usize] += g.iter().sum::<f64>();
                }
                Op::Add(a, b) => {
                    acc(pre, a, &mut |k| g[k]);
                    acc(pre, b, &mut |k| g[k]);
                }
                Op::Sub(a, b) => {
                    acc(pre, a, &mut |k| g[k]);
                    acc(pre, b, &mut |k| -g[k]);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(a), val(b));
                    acc(pre, a, &mut |k| g[k] * vb[k]);
                    acc(pre, b, &mut |k| g[k] * va[k]);
                }
                Op::Div(a, b) => {
                    let (va, vb) = (val(a), val(b));
                    acc(pre, a, &mut |k| g[k] / vb[k]);
                    acc(pre, b, &mut |k| -g[k] * va[k] / (vb[k] * vb[k]));
                }
                Op::Neg(a) => acc(pre, a, &mut |k| -g[k]),
                Op::Exp(a) => {
                    let v = val(NodeId(i as u32));
                    acc(pre, a, &mut |k| g[k] * v[k]);
                }
                Op::Ln(a) => {
                    let va = val(a);
                    acc(pre, a, &mut |k| g[k] / va[k].max(LN_CLAMP));
                }
                Op::Sin(a) => {
                    let va = val(a);
                    acc(pre, a, &mut |k| g[k] * va[k].cos());
                }
                Op::Cos(a) => {
                    let va = val(a);
                    acc(pre, a, &mut |k| -g[k] * va[k].sin());
                }
                Op::Tanh(a) => {
                    let v = val(NodeId(i as u32));
                    acc(pre, a, &mut |k| g[k] * (1.0 - v[k] * v[k]));
                }
                Op::Sigmoid(a) => {
                    let v = val(NodeId(i as u32));
                    acc(pre, a, &mut |k| g[k] * v[k] * (1.0 - v[k]));
                }
                Op::Max(a, b) => {
                    let (va, vb) = (val(a), val(b));
                    acc(pre, a, &mut |k| if va[k] >= vb[k] { g[k] } else { 0.0 });
                    acc(pre, b, &mut |k| if va[k] < vb[k] { g[k] } else { 0.0 });
                }
                Op::GeMask(..) => {}
            }
        }
    }
}

impl Executor {
    /// Adjoint values of `node` after [`Executor::backward_chunk`].
    pub fn chunk_adjoints(&self, node: NodeId, len: usize) -> &[f64] {
        &self.adjoints[node.index() * self.chunk..node.index() * self.chunk + len]
    }
}

/// Fully materialized evaluation of a graph over one batch.
pub struct Evaluated {
    values: Vec<f64>,
    n: usize,
    n_nodes: usize,
}

impl Evaluated {
    pub fn value(&self, node: NodeId) -> &[f64] {
        &self.values[node.index() * self.n..(node.index() + 1) * self.n]
    }

    pub fn scalar(&self, node: NodeId) -> f64 {
        self.value(node)[0]
    }

    pub fn batch_len(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }
}

impl Graph {
    /// Evaluates every node over a batch of bound inputs in one topological
    /// pass, checking for non-finite values.
    ///
    /// `inputs[slot]` holds the batch for input slot `slot`; all slots must
    /// have equal lengths. Graphs without inputs evaluate with batch 1.
    pub fn evaluate(&self, params: &dyn ParamValues, inputs: &[&[f64]]) -> Result<Evaluated> {
        let n = if self.n_inputs() == 0 {
            1
        } else {
            if inputs.len() < self.n_inputs() {
                return Err(Error::UnboundInput(inputs.len()));
            }
            let n = inputs[0].len();
            if n == 0 {
                return Err(Error::Empty(1));
            }
            for (slot, col) in inputs.iter().enumerate().take(self.n_inputs()) {
                if col.len() != n {
                    return Err(Error::ShapeMismatch {
                        name: format!("input slot {slot}"),
                        expected: n,
                        actual: col.len(),
                    });
                }
            }
            n
        };
        self.evaluate_unchecked(params, inputs, n, true)
    }

    /// Like [`Graph::evaluate`] but skipping the non-finite scan; used by
    /// oracles that intentionally probe singular points.
    pub fn evaluate_lenient(
        &self,
        params: &dyn ParamValues,
        inputs: &[&[f64]],
        n: usize,
    ) -> Result<Evaluated> {
        self.evaluate_unchecked(params, inputs, n, false)
    }

    fn evaluate_unchecked(
        &self,
        params: &dyn ParamValues,
        inputs: &[&[f64]],
        n: usize,
        check_finite: bool,
    ) -> Result<Evaluated> {
        let mut values = vec![0.0; self.len() * n];
        let mut exec = Executor::new(self, n);
        let chunk = exec.chunk_len();
        let mut offset = 0;
        while offset < n {
            let len = chunk.min(n - offset);
            exec.forward_chunk(self, params, inputs, offset, len)?;
            for i in 0..self.len() {
                let src = exec.chunk_values(NodeId(i as u32), len);
                values[i * n + offset..i * n + offset + len].copy_from_slice(src);
            }
            offset += len;
        }
        if check_finite {
            for (i, op) in self.ops().iter().enumerate() {
                if values[i * n..(i + 1) * n].iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        node: i,
                        op: op.name().to_string(),
                    });
                }
            }
        }
        Ok(Evaluated {
            values,
            n,
            n_nodes: self.len(),
        })
    }

    /// Numeric reverse-mode gradient values of `output` with respect to the
    /// `wrt` nodes, per batch element. No graph nodes are created; use
    /// [`super::grad_graph`] when the gradient itself must stay
    /// differentiable.
    pub fn grad_values(
        &self,
        params: &dyn ParamValues,
        inputs: &[&[f64]],
        output: NodeId,
        wrt: &[NodeId],
    ) -> Result<Vec<Vec<f64>>> {
        let n = if self.n_inputs() == 0 {
            1
        } else {
            inputs.first().map(|c| c.len()).unwrap_or(1)
        };
        let mut out: Vec<Vec<f64>> = wrt.iter().map(|_| vec![0.0; n]).collect();
        let mut exec = Executor::new(self, n);
        let mut grads = vec![0.0; self.params().len()];
        let chunk = exec.chunk_len();
        let mut offset = 0;
        while offset < n {
            let len = chunk.min(n - offset);
            exec.forward_chunk(self, params, inputs, offset, len)?;
            grads.iter_mut().for_each(|g| *g = 0.0);
            exec.backward_chunk(self, output, 1.0, len, &mut grads);
            for (j, &w) in wrt.iter().enumerate() {
                out[j][offset..offset + len].copy_from_slice(exec.chunk_adjoints(w, len));
            }
            offset += len;
        }
        Ok(out)
    }
}
