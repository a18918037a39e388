//! Convex function catalog: diagonal metrics, proximable terms and smooth
//! terms.
//!
//! Every prox entry point takes the algorithm's preconditioner `U` and
//! evaluates the proximity operator in the metric weighted by `U⁻¹`:
//!
//! ```text
//! prox_in_metric(f, U, x) = argmin_y f(y) + ½ ‖x − y‖²_{U⁻¹}
//! ```
//!
//! which is the form the primal-dual iterations consume directly.

mod metric;
pub(crate) mod prox;
mod smooth;

pub use metric::{BlockStructure, DiagonalMetric, DEFAULT_METRIC_FLOOR};
pub use prox::{prox_conjugate_in_metric, prox_in_metric, InfConvTerm, ProxTerm};
pub use smooth::{
    gradient, lipschitz_under_metric, CustomSmooth, LipschitzBound, QuadraticPart, SmoothTerm,
};
