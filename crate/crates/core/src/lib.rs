//! Growing small neural networks by splitting neurons along eigen-directions
//! of their splitting matrices, with signed output-weight fractions.
//!
//! The crate is organized around six pieces:
//!
//! - [`numerics`]: symmetric eigensolvers (exact Jacobi and approximate
//!   Rayleigh-quotient iteration).
//! - [`model`]: small dense networks, smooth activations with second
//!   derivatives, losses, exact gradients, and deterministic training.
//! - [`splitting`]: splitting matrices, closed-form optimal signed split
//!   schemes for 2-4 copies, a brute-force optimization oracle, network
//!   surgery, and Taylor-order verification.
//! - [`theory`]: numerical checkers for the convergence analysis (data
//!   spectrum constant, curvature floor, loss/likelihood bounds, iteration
//!   and initial-width bounds).
//! - [`planner`]: neuron ranking and exact knapsack selection of split
//!   multiplicities under a neuron budget.
//! - [`engine`] and [`harness`]: the alternating train/split growth loop,
//!   experiment configs, file formats, and verification suites.

pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod planner;
pub mod splitting;
pub mod theory;

pub use error::{Error, Result};
