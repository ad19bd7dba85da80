//! Max-plus basis approximation of value functions for switched
//! linear-quadratic optimal control problems.
//!
//! The value function is represented as a pointwise maximum of quadratic
//! forms ([`MaxPlusApprox`]). Each step propagates every form through every
//! mode of a [`SwitchedSystem`] by solving a differential Riccati equation
//! through the matrix exponential of its Hamiltonian matrix, then prunes the
//! resulting set back to a budget with one of several facility-location
//! heuristics.
//!
//! Module map:
//!
//! - [`numkernel`]: small dense kernels (matrix exponential, solves, PSD
//!   projection).
//! - [`quadform`]: quadratic forms and their max-plus sums.
//! - [`propagation`]: per-mode propagation and the full iteration.
//! - [`sdpsolve`]: SDP relaxation of the importance metric and randomized
//!   rounding.
//! - [`pruning`]: sort-upper, sort-lower, Jain-Vazirani, greedy and
//!   brute-force pruners.
//! - [`residual`]: Hamiltonian backsubstitution diagnostics.
//! - [`semiconvex`]: approximation-error experiments for semiconvex
//!   functions.

pub mod error;
pub mod numkernel;
pub mod propagation;
pub mod pruning;
pub mod quadform;
pub mod residual;
pub mod sdpsolve;
pub mod semiconvex;
mod seed;

pub use error::{Error, Result};
pub use numkernel::{Matrix, SymMatrix};
pub use propagation::{Mode, ModePropagator, SolveOptions, SolveReport, StepReport, SwitchedSystem};
pub use pruning::{PruneInstance, PruneResult, PrunerKind};
pub use quadform::{FormTag, HomogenizedForm, MaxPlusApprox, QuadraticForm};
pub use residual::{GridSlice, ResidualField};
pub use sdpsolve::{ImportanceSdp, SdpOptions, SdpSolution, SdpStatus};
