//! Numerics for the magnetization dynamics of the Curie-Weiss spin-flip model.
//!
//! The crate covers the full pipeline from the microscopic jump chain to its
//! scaling limits:
//!
//! * [`model`] — interaction potentials, the `G1`/`G2` functions whose zeros
//!   are the mean-field fixed points, and the deterministic flow
//!   `ṁ = 2 G2(m)`.
//! * [`simulator`] — exact event-driven simulation of the magnetization jump
//!   chain on the grid `E_n = {-1, -1 + 2/n, …, 1}`, the moderate-deviation /
//!   central-limit space-time rescalings, and an exact transition-law
//!   evaluator (uniformization) for large workloads.
//! * [`genconv`] — exact evaluation of the prelimit nonlinear generators
//!   `H_n f` and linear generators `A_n f`, with convergence ladders against
//!   the closed-form limits.
//! * [`hamiltonian`] — limiting Hamiltonians `H(x,p)`, Lagrangians, action
//!   functionals on paths, optimal paths and quasi-potentials.
//! * [`sdelimit`] — Euler-Maruyama integration of the limiting diffusions and
//!   their stationary densities via the 1-D Fokker-Planck formula.
//! * [`stats`] — empirical-distribution comparison (Kolmogorov-Smirnov,
//!   Wasserstein-1) and decay-rate fitting.

pub mod error;
pub mod genconv;
pub mod hamiltonian;
pub mod model;
pub mod rng;
pub mod sdelimit;
pub mod simulator;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
