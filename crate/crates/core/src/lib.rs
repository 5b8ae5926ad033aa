//! Solvers for the 1+1 semilinear wave equation with scale-invariant damping
//! and mass,
//!
//! ```text
//! φ_tt - φ_xx + μ/(1+t) φ_t + ν²/(1+t)² φ = |φ|^p,   x ∈ [0, 1],
//! ```
//!
//! integrated through the substitution `φ = (1+t)^(-μ/2) u`, which turns it
//! into `u_tt - u_xx = (1+t)^(-μ(p-1)/2) |u|^p` when `δ = (μ-1)² - 4ν² = 1`.
//!
//! Two discretizations are provided, a Galerkin hat-function scheme
//! ([`gfem`]) and a pure finite-difference scheme ([`fdm`]), both θ-weighted
//! in time and solved per step by a frozen-Jacobian Newton iteration
//! ([`newton`]). [`driver`] runs whole simulations, compares the two schemes
//! and measures convergence against manufactured solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod driver;
pub mod error;
pub mod fdm;
pub mod gfem;
pub mod initcond;
pub mod linalg;
pub mod model;
pub mod newton;
pub mod scheme;
pub mod transform;

pub use error::{Error, Result};
pub use model::{Grid1D, ModelParams, Theta, TimeState};
