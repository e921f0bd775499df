//! Simulation and optimal-control verification for a continuously monitored
//! qubit under direct angle control.
//!
//! The conditional state of a qubit whose `σ_z` observable is monitored obeys a
//! stochastic filtering equation. Under the assumption that the Bloch angle can
//! be set instantaneously, the linear entropy `S = 1 − R²` becomes a scalar
//! controlled diffusion
//!
//! ```text
//! dS = −4S [1 − (1−S)u²] dt − 4S √(1−S) u dW,     u = cos θ ∈ [−1, 1]
//! ```
//!
//! The crate provides:
//! - [`sde`]: state representations and integrators for the density matrix,
//!   Bloch vector and linear-entropy forms driven by a shared noise stream,
//! - [`strategies`]: the two feedback laws (hold `u = 0`, hold `u = 1`) and
//!   their closed-form cost predictions,
//! - [`bellman`]: the controlled generator, its `v²` coefficient, closed-form
//!   value functions and checkers for the two verification theorems,
//! - [`dp`]: explicit finite-difference solvers for both Bellman equations,
//! - [`montecarlo`]: ensembles, first-passage estimation, Dynkin checks,
//!   strategy comparison and coordinate cross-validation,
//! - [`cli`]: configuration parsing and command execution for the binary.

pub mod bellman;
pub mod cli;
pub mod dp;
pub mod error;
pub mod montecarlo;
pub mod sde;
pub mod strategies;

pub use error::{Error, Result};
