//! Scalar computation-graph automatic differentiation.
//!
//! Graphs are append-only arenas of elementwise operations over batched
//! values (one value per sample point). Reverse-mode gradients come in two
//! flavours: [`grad_graph`] builds the gradient as new graph nodes, so the
//! result can be differentiated again (second and third order derivatives
//! for PDE residuals), while numeric backward passes in [`exec`] produce
//! gradient values only, which is what the training loop uses for
//! d(loss)/d(parameters).

mod check;
mod exec;
#[cfg(test)]
mod tests;
mod grad;
mod graph;

pub use check::{check_gradient, check_gradient_multi};
pub use exec::{Evaluated, Executor, NoParams, ParamValues};
pub use grad::grad_graph;
pub use graph::{Graph, NodeId, Op, LN_CLAMP};
