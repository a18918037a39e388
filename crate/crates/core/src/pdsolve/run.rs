use std::fmt::Write as _;
use std::io;
use std::time::Instant;

use super::admissibility::{validate, Algorithm};
use super::fb::fb_primal_step;
use super::params::PdParams;
use super::problem::{CompositeProblem, SolverState};
use super::steps::{pd1_step, pd2_step};
use crate::error::{check_len, Error, Result};
use crate::imaging::snr_db_slices;
use crate::linop::norm;

/// Optional per-iteration diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub objective: bool,
    /// Reference solution for `‖x_n − x̃‖ / ‖x̃‖`.
    pub reference: Option<Vec<f64>>,
    /// Clean signal for SNR tracking.
    pub snr_reference: Option<Vec<f64>>,
    /// Record wall-clock time. Off by default so traces are reproducible.
    pub record_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub time_s: Option<f64>,
    pub rel_change: f64,
    pub objective: Option<f64>,
    pub dist_to_ref: Option<f64>,
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "iter,time_s,rel_change,objective,dist_to_ref,snr";

fn field(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First iteration whose distance to the reference is at most `tol`.
    pub fn first_iter_within(&self, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.dist_to_ref.is_some_and(|d| d <= tol))
            .map(|r| r.iter)
    }

    pub fn record_at(&self, iter: usize) -> Option<&TraceRecord> {
        self.records.iter().find(|r| r.iter == iter)
    }

    /// CSV with header; disabled diagnostics leave empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}", r.iter);
            field(&mut out, r.time_s);
            field(&mut out, Some(r.rel_change));
            field(&mut out, r.objective);
            field(&mut out, r.dist_to_ref);
            field(&mut out, r.snr);
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    WallClock,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub trace: SolverTrace,
    pub stop: StopReason,
}

/// Iterate `algorithm` from `start` until the relative primal change drops
/// to `stop_tol`, `max_iter` steps have run, or the wall clock expires.
///
/// Parameters are validated first and rejected unless `params.force` is set.
pub fn run(
    algorithm: Algorithm,
    problem: &CompositeProblem,
    params: &PdParams,
    diagnostics: &Diagnostics,
    start: SolverState,
) -> Result<RunOutput> {
    params.check(problem)?;
    start.check(problem)?;
    for r in diagnostics
        .reference
        .iter()
        .chain(diagnostics.snr_reference.iter())
    {
        check_len("diagnostic reference", problem.dim(), r.len())?;
    }
    if algorithm == Algorithm::Pd2 && !problem.f.is_zero() {
        return Err(Error::Structural("PD2 requires f = 0".into()));
    }
    let needs_report = !params.force || algorithm == Algorithm::ForwardBackward;
    let report = if needs_report {
        Some(validate(algorithm, problem, params)?)
    } else {
        None
    };
    if let Some(r) = &report {
        if !r.admissible && !params.force {
            return Err(Error::Inadmissible(Box::new(r.clone())));
        }
    }
    let fb_beta = report.as_ref().map_or(f64::INFINITY, |r| r.condition_lhs);

    let clock = Instant::now();
    let ref_norm = diagnostics
        .reference
        .as_ref()
        .map(|r| norm(r).max(f64::MIN_POSITIVE));
    let mut state = start;
    let mut trace = SolverTrace::default();
    let mut stop = StopReason::MaxIterations;

    for _ in 0..params.max_iter {
        if params
            .wall_clock_limit
            .is_some_and(|limit| clock.elapsed() >= limit)
        {
            stop = StopReason::WallClock;
            break;
        }
        let next = match algorithm {
            Algorithm::Pd1 => pd1_step(&state, problem, params)?,
            Algorithm::Pd2 => pd2_step(&state, problem, params)?,
            Algorithm::ForwardBackward => {
                let errors = params
                    .errors
                    .map(|s| s.at(state.n, problem))
                    .unwrap_or_default();
                let x = fb_primal_step(&state.x, problem, params, fb_beta, &errors)?;
                SolverState {
                    n: state.n + 1,
                    x,
                    v: state.v.clone(),
                }
            }
        };
        if !next.is_finite() {
            return Err(Error::Divergence { iteration: next.n });
        }
        let diff: f64 = next
            .x
            .iter()
            .zip(&state.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let rel_change = diff / norm(&state.x).max(1.0);
        let dist_to_ref = diagnostics.reference.as_ref().zip(ref_norm).map(|(r, rn)| {
            next.x
                .iter()
                .zip(r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / rn
        });
        trace.records.push(TraceRecord {
            iter: next.n,
            time_s: diagnostics
                .record_time
                .then(|| clock.elapsed().as_secs_f64()),
            rel_change,
            objective: if diagnostics.objective {
                Some(problem.objective(&next.x)?)
            } else {
                None
            },
            dist_to_ref,
            snr: diagnostics
                .snr_reference
                .as_ref()
                .map(|r| snr_db_slices(r, &next.x)),
        });
        state = next;
        if params.stop_tol > 0.0 && rel_change <= params.stop_tol {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(RunOutput { state, trace, stop })
}
