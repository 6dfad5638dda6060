//! Kolmogorov-Arnold layers: learnable B-spline edge activations, adaptive
//! knot grids, and snapping of learned activations to a small library of
//! univariate functions.

mod model;
mod snap;
mod spline;
#[cfg(test)]
mod tests;

pub use model::{KanCore, KanModel};
pub use snap::{snap_to_symbolic, Snap, LIBRARY};
pub use spline::{bspline_basis, bspline_basis_graph, fit_coefficients, SplineActivation, SplineGrid};
