/// Arguments below which `ln` clamps, so PTA blocks can feed it near-zero
/// values during early training without producing infinities.
pub const LN_CLAMP: f64 = 1e-12;

/// Index of a node within its [`Graph`]. Node ids are assigned in
/// construction order, which is also a topological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Elementwise operation carried by a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Const(f64),
    /// Batched input bound at evaluation time; the payload is the slot index.
    Input(usize),
    /// Trainable scalar read from a parameter store; the payload indexes
    /// into [`Graph::params`].
    Param(u32),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    /// Natural log of `max(x, LN_CLAMP)`.
    Ln(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Max(NodeId, NodeId),
    /// 1.0 where `a >= b`, else 0.0. Derivative is zero; used for the
    /// subgradient of `Max` and for piecewise-constant spline seeds.
    GeMask(NodeId, NodeId),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Const(_) => "constant",
            Op::Input(_) => "input",
            Op::Param(_) => "parameter",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Neg(_) => "neg",
            Op::Exp(_) => "exp",
            Op::Ln(_) => "ln",
            Op::Sin(_) => "sin",
            Op::Cos(_) => "cos",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Max(..) => "max",
            Op::GeMask(..) => "ge_mask",
        }
    }
}

/// Reference to one scalar inside a named parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParamRef {
    pub name: String,
    pub index: usize,
}

/// Structural key for hash-consing; `Const` stores the value's bits so the
/// key can be `Eq + Hash`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum OpKey {
    Const(u64),
    Input(usize),
    Unary(u8, NodeId),
    Binary(u8, NodeId, NodeId),
}

fn op_key(op: &Op) -> Option<OpKey> {
    Some(match *op {
        Op::Const(v) => OpKey::Const(v.to_bits()),
        Op::Input(slot) => OpKey::Input(slot),
        Op::Param(_) => return None, // deduped separately by (name, index)
        Op::Add(a, b) => OpKey::Binary(0, a, b),
        Op::Sub(a, b) => OpKey::Binary(1, a, b),
        Op::Mul(a, b) => OpKey::Binary(2, a, b),
        Op::Div(a, b) => OpKey::Binary(3, a, b),
        Op::Max(a, b) => OpKey::Binary(4, a, b),
        Op::GeMask(a, b) => OpKey::Binary(5, a, b),
        Op::Neg(a) => OpKey::Unary(0, a),
        Op::Exp(a) => OpKey::Unary(1, a),
        Op::Ln(a) => OpKey::Unary(2, a),
        Op::Sin(a) => OpKey::Unary(3, a),
        Op::Cos(a) => OpKey::Unary(4, a),
        Op::Tanh(a) => OpKey::Unary(5, a),
        Op::Sigmoid(a) => OpKey::Unary(6, a),
    })
}

/// Append-only computation graph. Nodes are immutable once pushed; repeated
/// differentiation appends new nodes instead of mutating existing ones.
/// Structurally identical nodes are shared (hash-consing), which keeps
/// repeated differentiation from exploding the graph.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    ops: Vec<Op>,
    params: Vec<ParamRef>,
    n_inputs: usize,
    /// Named nodes whose batch values the trainer exposes to model
    /// maintenance hooks (grid updates, output normalizers).
    watches: Vec<(String, NodeId)>,
    cache: std::collections::HashMap<OpKey, NodeId>,
    param_cache: std::collections::HashMap<(String, usize), NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    #[inline]
    pub fn op(&self, id: NodeId) -> Op {
        self.ops[id.index()]
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn params(&self) -> &[ParamRef] {
        &self.params
    }

    pub fn watches(&self) -> &[(String, NodeId)] {
        &self.watches
    }

    pub fn watch(&mut self, name: impl Into<String>, node: NodeId) {
        self.watches.push((name.into(), node));
    }

    fn push(&mut self, op: Op) -> NodeId {
        let key = op_key(&op);
        if let Some(k) = &key {
            if let Some(&id) = self.cache.get(k) {
                return id;
            }
        }
        let id = NodeId(self.ops.len() as u32);
        self.ops.push(op);
        if let Some(k) = key {
            self.cache.insert(k, id);
        }
        id
    }

    pub fn as_const(&self, id: NodeId) -> Option<f64> {
        match self.op(id) {
            Op::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Op::Const(v))
    }

    /// Declares (or reuses) input slot `slot`. Slots are bound to batched
    /// value arrays at evaluation time.
    pub fn input(&mut self, slot: usize) -> NodeId {
        self.n_inputs = self.n_inputs.max(slot + 1);
        self.push(Op::Input(slot))
    }

    pub fn param(&mut self, name: &str, index: usize) -> NodeId {
        let key = (name.to_string(), index);
        if let Some(&id) = self.param_cache.get(&key) {
            return id;
        }
        let pid = self.params.len() as u32;
        self.params.push(ParamRef {
            name: key.0.clone(),
            index,
        });
        let id = self.push(Op::Param(pid));
        self.param_cache.insert(key, id);
        id
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x + y),
            (Some(x), None) if x == 0.0 => b,
            (None, Some(y)) if y == 0.0 => a,
            _ => self.push(Op::Add(a, b)),
        }
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x - y),
            (None, Some(y)) if y == 0.0 => a,
            (Some(x), None) if x == 0.0 => self.neg(b),
            _ => self.push(Op::Sub(a, b)),
        }
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x * y),
            (Some(x), None) if x == 0.0 => self.constant(0.0),
            (None, Some(y)) if y == 0.0 => self.constant(0.0),
            (Some(x), None) if x == 1.0 => b,
            (None, Some(y)) if y == 1.0 => a,
            _ => self.push(Op::Mul(a, b)),
        }
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x / y),
            (Some(x), None) if x == 0.0 => self.constant(0.0),
            (None, Some(y)) if y == 1.0 => a,
            _ => self.push(Op::Div(a, b)),
        }
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(-x),
            None => self.push(Op::Neg(a)),
        }
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(x.exp()),
            None => self.push(Op::Exp(a)),
        }
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(x.max(LN_CLAMP).ln()),
            None => self.push(Op::Ln(a)),
        }
    }

    pub fn sin(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(x.sin()),
            None => self.push(Op::Sin(a)),
        }
    }

    pub fn cos(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(x.cos()),
            None => self.push(Op::Cos(a)),
        }
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(x.tanh()),
            None => self.push(Op::Tanh(a)),
        }
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        match self.as_const(a) {
            Some(x) => self.constant(1.0 / (1.0 + (-x).exp())),
            None => self.push(Op::Sigmoid(a)),
        }
    }

    pub fn max(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(x.max(y)),
            _ => self.push(Op::Max(a, b)),
        }
    }

    pub fn ge_mask(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(x), Some(y)) => self.constant(if x >= y { 1.0 } else { 0.0 }),
            _ => self.push(Op::GeMask(a, b)),
        }
    }

    /// `x / (1 + e^-x)`, the residual base term of spline activations.
    pub fn silu(&mut self, a: NodeId) -> NodeId {
        let s = self.sigmoid(a);
        self.mul(a, s)
    }

    /// Real-exponent power, expanded as `exp(w * ln(x))` so it inherits the
    /// `ln` clamp and stays differentiable in both arguments.
    pub fn pow(&mut self, base: NodeId, exponent: NodeId) -> NodeId {
        let l = self.ln(base);
        let p = self.mul(exponent, l);
        self.exp(p)
    }

    /// Small nonnegative integer power via repeated multiplication.
    pub fn powi(&mut self, base: NodeId, n: u32) -> NodeId {
        match n {
            0 => self.constant(1.0),
            _ => {
                let mut acc = base;
                for _ in 1..n {
                    acc = self.mul(acc, base);
                }
                acc
            }
        }
    }

    pub fn add_scaled(&mut self, acc: Option<NodeId>, term: NodeId) -> NodeId {
        match acc {
            None => term,
            Some(a) => self.add(a, term),
        }
    }

    /// Sum of a slice of nodes; empty slices sum to the constant zero.
    pub fn sum(&mut self, terms: &[NodeId]) -> NodeId {
        let mut acc = None;
        for &t in terms {
            acc = Some(self.add_scaled(acc, t));
        }
        acc.unwrap_or_else(|| self.constant(0.0))
    }

    /// Affine map `a * x + b` with constant coefficients.
    pub fn affine(&mut self, x: NodeId, a: f64, b: f64) -> NodeId {
        let ca = self.constant(a);
        let cb = self.constant(b);
        let ax = self.mul(ca, x);
        self.add(ax, cb)
    }

    /// Copy containing only nodes reachable from `roots` or a watch, with
    /// ids remapped; returns the mapped roots. Symbolic differentiation
    /// builds adjoints for every leaf, so graphs used only through a few
    /// outputs carry substantial dead weight that this strips before
    /// batched evaluation.
    pub fn compacted(&self, roots: &[NodeId]) -> (Graph, Vec<NodeId>) {
        let mut live = vec![false; self.ops.len()];
        let mut stack: Vec<usize> = roots.iter().map(|r| r.index()).collect();
        stack.extend(self.watches.iter().map(|(_, n)| n.index()));
        while let Some(i) = stack.pop() {
            if live[i] {
                continue;
            }
            live[i] = true;
            match self.ops[i] {
                Op::Const(_) | Op::Input(_) | Op::Param(_) => {}
                Op::Neg(a)
                | Op::Exp(a)
                | Op::Ln(a)
                | Op::Sin(a)
                | Op::Cos(a)
                | Op::Tanh(a)
                | Op::Sigmoid(a) => stack.push(a.index()),
                Op::Add(a, b)
                | Op::Sub(a, b)
                | Op::Mul(a, b)
                | Op::Div(a, b)
                | Op::Max(a, b)
                | Op::GeMask(a, b) => {
                    stack.push(a.index());
                    stack.push(b.index());
                }
            }
        }
        let mut g = Graph::new();
        let mut map = vec![NodeId(0); self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let m = |id: NodeId| map[id.index()];
            map[i] = match *op {
                Op::Const(c) => g.constant(c),
                Op::Input(slot) => g.input(slot),
                Op::Param(pid) => {
                    let p = &self.params[pid as usize];
                    g.param(&p.name, p.index)
                }
                Op::Add(a, b) => g.push(Op::Add(m(a), m(b))),
                Op::Sub(a, b) => g.push(Op::Sub(m(a), m(b))),
                Op::Mul(a, b) => g.push(Op::Mul(m(a), m(b))),
                Op::Div(a, b) => g.push(Op::Div(m(a), m(b))),
                Op::Max(a, b) => g.push(Op::Max(m(a), m(b))),
                Op::GeMask(a, b) => g.push(Op::GeMask(m(a), m(b))),
                Op::Neg(a) => g.push(Op::Neg(m(a))),
                Op::Exp(a) => g.push(Op::Exp(m(a))),
                Op::Ln(a) => g.push(Op::Ln(m(a))),
                Op::Sin(a) => g.push(Op::Sin(m(a))),
                Op::Cos(a) => g.push(Op::Cos(m(a))),
                Op::Tanh(a) => g.push(Op::Tanh(m(a))),
                Op::Sigmoid(a) => g.push(Op::Sigmoid(m(a))),
            };
        }
        for (name, node) in &self.watches {
            g.watch(name.clone(), map[node.index()]);
        }
        (g, roots.iter().map(|r| map[r.index()]).collect())
    }
}
