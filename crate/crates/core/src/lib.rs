//! Variable-metric primal-dual proximal splitting.
//!
//! [`linop`] holds matrix-free linear maps, [`funcs`] the proximable and
//! smooth terms, [`pdsolve`] the solvers and their admissibility checks, and
//! [`imaging`] with [`experiment`] the image restoration tooling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod funcs;
pub mod imaging;
pub mod linop;
pub mod pdsolve;
pub mod rng;

pub use error::{Error, Result};
pub use funcs::{BlockStructure, DiagonalMetric, InfConvTerm, ProxTerm, SmoothTerm};
pub use imaging::Image;
pub use linop::{LinearMap, NormEstimate, NormOptions};
pub use pdsolve::{
    run, validate, AdmissibilityReport, Algorithm, CompositeProblem, Diagnostics, DualBlock,
    PdParams, RunOutput, SolverState, SolverTrace,
};
