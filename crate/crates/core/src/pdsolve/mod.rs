//! Primal-dual splitting for composite monotone inclusions.

mod admissibility;
mod fb;
mod params;
mod problem;
mod run;
mod steps;

pub use admissibility::{
    validate, validate_fb, validate_pd1, validate_pd2, AdmissibilityReport, Algorithm,
    STRICT_MARGIN,
};
pub use fb::{fb_step, MetricOperator};
pub use params::{ErrorSchedule, ErrorTargets, PdParams, StepErrors};
pub use problem::{CompositeProblem, DualBlock, SolverState};
pub use run::{
    run, Diagnostics, RunOutput, SolverTrace, StopReason, TraceRecord, TRACE_CSV_HEADER,
};
pub use steps::{pd1_step, pd1_step_with, pd2_step, pd2_step_with};
