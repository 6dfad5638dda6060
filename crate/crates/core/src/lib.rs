//! Interpretable neural networks trained by backpropagation.
//!
//! The crate provides three interpretable architectures — GINN (growing
//! power-term networks), KAN (B-spline Kolmogorov-Arnold networks) and the
//! composite GINN-KAN — together with a scalar computation-graph autodiff
//! engine that supports derivative-graph construction (so PDE residuals
//! containing second derivatives stay differentiable w.r.t. parameters),
//! a physics-informed training framework over a registry of 15 PDEs with
//! analytical solutions, and a symbolic-regression benchmark harness.

pub mod autodiff;
pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod expr;
pub mod ginn;
pub mod ginnkan;
pub mod kan;
pub mod model;
pub mod nn;
pub mod pinn;
pub mod util;

pub use error::{Error, Result};
