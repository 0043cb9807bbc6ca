//! Solver and estimate verifier for the coupled elliptic system
//!
//! ```text
//! −div(ν(k)∇u) = f,    −div(a(k)∇k) = ν(k)|∇u|²   in Ω,   u = k = 0 on ∂Ω
//! ```
//!
//! with eddy viscosities that grow without bound in `k`. The system is
//! approached through truncated problems where `ν`, `a` and the quadratic
//! source are capped at level `n`, each solved by a lagged fixed-point
//! iteration on a cell-centered five-point discretization.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coeffs;
pub mod config;
pub mod error;
pub mod fixedpoint;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod scheme;
pub mod verify;

pub use error::{Error, Result};
