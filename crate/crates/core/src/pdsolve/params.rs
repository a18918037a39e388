use std::time::Duration;

use super::problem::CompositeProblem;
use crate::error::{check_len, Error, Result};
use crate::funcs::DiagonalMetric;
use crate::linop::NormOptions;
use crate::rng::CounterRng;

/// Solver configuration. Metrics are constant for the whole run.
#[derive(Debug, Clone)]
pub struct PdParams {
    /// Primal preconditioner `U`.
    pub primal_metric: DiagonalMetric,
    /// Dual preconditioners `U_i`, one per block.
    pub dual_metrics: Vec<DiagonalMetric>,
    /// Constant relaxation `λ ∈ ]0, 1]`.
    pub lambda: f64,
    pub errors: Option<ErrorSchedule>,
    pub max_iter: usize,
    /// Stop once `‖x_{n+1} − x_n‖ / max(‖x_n‖, 1) ≤ stop_tol`; zero disables.
    pub stop_tol: f64,
    pub wall_clock_limit: Option<Duration>,
    /// Run even when the admissibility check fails.
    pub force: bool,
    pub norm_options: NormOptions,
}

impl PdParams {
    pub fn new(primal_metric: DiagonalMetric, dual_metrics: Vec<DiagonalMetric>) -> Self {
        PdParams {
            primal_metric,
            dual_metrics,
            lambda: 1.0,
            errors: None,
            max_iter: 1000,
            stop_tol: 0.0,
            wall_clock_limit: None,
            force: false,
            norm_options: NormOptions::default(),
        }
    }

    /// `U = τ Id`, `U_i = σ_i Id`.
    pub fn scalar(problem: &CompositeProblem, tau: f64, sigmas: &[f64]) -> Result<Self> {
        check_len("dual step sizes", problem.blocks.len(), sigmas.len())?;
        let dual = problem
            .blocks
            .iter()
            .zip(sigmas)
            .map(|(b, &s)| DiagonalMetric::scalar(b.dim(), s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(DiagonalMetric::scalar(problem.dim(), tau)?, dual))
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_errors(mut self, errors: ErrorSchedule) -> Self {
        self.errors = Some(errors);
        self
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }

    pub(crate) fn check(&self, problem: &CompositeProblem) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "relaxation must lie in ]0, 1], got {}",
                self.lambda
            )));
        }
        check_len("primal metric", problem.dim(), self.primal_metric.dim())?;
        check_len(
            "dual metric count",
            problem.blocks.len(),
            self.dual_metrics.len(),
        )?;
        for (m, b) in self.dual_metrics.iter().zip(&problem.blocks) {
            check_len("dual metric", b.dim(), m.dim())?;
        }
        Ok(())
    }
}

/// Which error sequences an [`ErrorSchedule`] injects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorTargets {
    /// `a_n`, added after the primal prox.
    pub primal_prox: bool,
    /// `c_n`, added to the primal gradient.
    pub primal_gradient: bool,
    /// `b_{i,n}`, added after each dual prox.
    pub dual_prox: bool,
    /// `d_{i,n}`, added to each `∇ℓ_i*`.
    pub dual_gradient: bool,
}

impl ErrorTargets {
    pub const ALL: ErrorTargets = ErrorTargets {
        primal_prox: true,
        primal_gradient: true,
        dual_prox: true,
        dual_gradient: true,
    };
}

/// Summable perturbations: component-wise standard Gaussians scaled by
/// `rho / (n + 1)^decay`, with `decay > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSchedule {
    rho: f64,
    decay: f64,
    seed: u64,
    targets: ErrorTargets,
}

const KIND_A: u64 = 0;
const KIND_C: u64 = 1;
const KIND_B: u64 = 2;
const KIND_D: u64 = 3;

impl ErrorSchedule {
    pub fn new(rho: f64, decay: f64, seed: u64, targets: ErrorTargets) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "error scale must be nonnegative, got {rho}"
            )));
        }
        if !(decay > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "error decay exponent must exceed 1 for summability, got {decay}"
            )));
        }
        Ok(ErrorSchedule {
            rho,
            decay,
            seed,
            targets,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    fn draw(&self, kind: u64, block: usize, n: usize, dim: usize) -> Vec<f64> {
        let scale = self.rho / ((n + 1) as f64).powf(self.decay);
        let stream = ((n as u64) << 16) | (kind << 12) | (block as u64 & 0xfff);
        CounterRng::new(self.seed, stream)
            .gauss_vec(dim)
            .into_iter()
            .map(|g| scale * g)
            .collect()
    }

    /// Error vectors for iteration `n`.
    pub fn at(&self, n: usize, problem: &CompositeProblem) -> StepErrors {
        let t = self.targets;
        let dims = problem.dual_dims();
        StepErrors {
            a: t.primal_prox
                .then(|| self.draw(KIND_A, 0, n, problem.dim())),
            c: t.primal_gradient
                .then(|| self.draw(KIND_C, 0, n, problem.dim())),
            b: dims
                .iter()
                .enumerate()
                .map(|(i, &d)| t.dual_prox.then(|| self.draw(KIND_B, i, n, d)))
                .collect(),
            d: dims
                .iter()
                .enumerate()
                .map(|(i, &d)| t.dual_gradient.then(|| self.draw(KIND_D, i, n, d)))
                .collect(),
        }
    }
}

/// Explicit error vectors for a single step; `None` means zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepErrors {
    pub a: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub b: Vec<Option<Vec<f64>>>,
    pub d: Vec<Option<Vec<f64>>>,
}

impl StepErrors {
    pub fn none() -> Self {
        StepErrors::default()
    }

    pub(crate) fn check(&self, problem: &CompositeProblem) -> Result<()> {
        for e in self.a.iter().chain(self.c.iter()) {
            check_len("primal error vector", problem.dim(), e.len())?;
        }
        for list in [&self.b, &self.d] {
            for (e, blk) in list.iter().zip(&problem.blocks) {
                if let Some(e) = e {
                    check_len("dual error vector", blk.dim(), e.len())?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn dual_prox(&self, i: usize) -> Option<&[f64]> {
        self.b.get(i).and_then(|e| e.as_deref())
    }

    pub(crate) fn dual_gradient(&self, i: usize) -> Option<&[f64]> {
        self.d.get(i).and_then(|e| e.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_must_be_summable() {
        assert!(ErrorSchedule::new(0.1, 1.0, 0, ErrorTargets::ALL).is_err());
        assert!(ErrorSchedule::new(-0.1, 2.0, 0, ErrorTargets::ALL).is_err());
        assert!(ErrorSchedule::new(0.1, 1.5, 0, ErrorTargets::ALL).is_ok());
    }

    #[test]
    fn draws_decay_and_repeat() {
        let s = ErrorSchedule::new(1.0, 2.0, 9, ErrorTargets::ALL).unwrap();
        let a0 = s.draw(KIND_A, 0, 0, 64);
        let a9 = s.draw(KIND_A, 0, 9, 64);
        let n0: f64 = a0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n9: f64 = a9.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n9 < n0 / 20.0);
        assert_eq!(a0, s.draw(KIND_A, 0, 0, 64));
        assert_ne!(a0, s.draw(KIND_C, 0, 0, 64));
    }
}
