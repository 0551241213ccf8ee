//! Attractor-landscape analysis for recurrent networks whose synapses follow
//! Hebbian or anti-Hebbian plasticity.
//!
//! Activations and weights evolve together:
//!
//! ```text
//! ẋ_i  = −a_i x_i + Σ_j w_ij φ(x_j) + u_i
//! ẇ_ij = −b_ij w_ij + c_ij φ(x_i) φ(x_j)
//! ```
//!
//! with the logistic sigmoid `φ`. The crate simulates these flows, finds and
//! classifies equilibria, certifies uniqueness where a contraction bound
//! holds, and tracks how the equilibrium set changes as learning rates vary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod equilibria;
pub mod exec;
pub mod integrate;
pub mod model;
pub mod netgen;
pub mod stability;
pub mod verify;

pub use exec::Execution;
