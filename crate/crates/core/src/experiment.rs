//! The two-observation restoration problem: recover `x` from
//! `w₁ = x + n₁` and `w₂ = H x + n₂` with a box constraint and total variation.

use crate::error::{check_len, Error, Result};
use crate::funcs::{BlockStructure, DiagonalMetric, ProxTerm, QuadraticPart, SmoothTerm};
use crate::imaging::{make_blur, make_gradients, Image, Kernel};
use crate::linop::LinearMap;
use crate::pdsolve::{validate_pd2, CompositeProblem, DualBlock, PdParams, SolverState};

pub const PIXEL_MIN: f64 = 0.0;
pub const PIXEL_MAX: f64 = 255.0;

/// Everything needed to assemble the restoration problem.
#[derive(Debug, Clone)]
pub struct Restoration {
    pub w1: Image,
    pub w2: Image,
    pub kernel: Kernel,
    /// `(θ₁², θ₂²)`.
    pub noise_variances: (f64, f64),
    pub kappa: f64,
    /// Also put the box constraint on `f` (then only PD1 applies).
    pub primal_constraint: bool,
}

impl Restoration {
    pub fn width(&self) -> usize {
        self.w1.width()
    }

    pub fn height(&self) -> usize {
        self.w1.height()
    }

    pub fn pixels(&self) -> usize {
        self.w1.len()
    }

    /// `h = ‖x − w₁‖²/θ₁² + ‖Hx − w₂‖²/θ₂²`, `g₁ = ι_[0,255]`,
    /// `g₂ = κ‖·‖₁,₂` on `[G₁x; G₂x]`, `f = 0`, `z = 0`, `r = 0`.
    pub fn problem(&self) -> Result<CompositeProblem> {
        let (w, h) = (self.width(), self.height());
        if self.w2.width() != w || self.w2.height() != h {
            return Err(Error::InvalidArgument(
                "observations must share dimensions".into(),
            ));
        }
        let (t1, t2) = self.noise_variances;
        if !(t1 > 0.0 && t2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variances must be positive for the data terms, got ({t1}, {t2})"
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        let n = w * h;
        let blur = make_blur(&self.kernel, w, h)?;
        let smooth = SmoothTerm::quadratic(vec![
            QuadraticPart::new(1.0 / t1, LinearMap::identity(n), self.w1.pixels().to_vec())?,
            QuadraticPart::new(1.0 / t2, blur, self.w2.pixels().to_vec())?,
        ])?;
        let (g1, g2) = make_gradients(w, h);
        let tv = ProxTerm::scaled_l12(self.kappa, BlockStructure::pixel_components(n, 2))?;
        let f = if self.primal_constraint {
            ProxTerm::box_indicator(PIXEL_MIN, PIXEL_MAX)?
        } else {
            ProxTerm::Zero
        };
        CompositeProblem::without_linear_term(
            n,
            f,
            smooth,
            vec![
                DualBlock::plain(
                    ProxTerm::box_indicator(PIXEL_MIN, PIXEL_MAX)?,
                    LinearMap::identity(n),
                )?,
                DualBlock::plain(tv, LinearMap::stack(vec![g1, g2])?)?,
            ],
        )
    }

    /// `x₀ = w₁`, `v₀ = 0`.
    pub fn initial_state(&self, problem: &CompositeProblem) -> Result<SolverState> {
        SolverState::new(problem, self.w1.pixels().to_vec())
    }
}

/// `U = τ Id`, `U₁ = σ₁ Id`, `U₂ = σ₂ Id`.
pub fn scalar_params(
    problem: &CompositeProblem,
    tau: f64,
    sigma1: f64,
    sigma2: f64,
) -> Result<PdParams> {
    PdParams::scalar(problem, tau, &[sigma1, sigma2])
}

/// Per-pixel weights: `primal` for `U`, `box_dual` for `U₁`, and `tv_dual`
/// repeated over both gradient components for `U₂`.
pub fn diagonal_params(primal: &[f64], box_dual: &[f64], tv_dual: &[f64]) -> Result<PdParams> {
    let n = primal.len();
    check_len("box dual weights", n, box_dual.len())?;
    check_len("tv dual weights", n, tv_dual.len())?;
    let mut tv = Vec::with_capacity(2 * n);
    tv.extend_from_slice(tv_dual);
    tv.extend_from_slice(tv_dual);
    Ok(PdParams::new(
        DiagonalMetric::new(primal.to_vec())?,
        vec![
            DiagonalMetric::new(box_dual.to_vec())?,
            DiagonalMetric::new(tv)?,
        ],
    ))
}

/// Knobs of the diagonal-metric heuristic.
///
/// Primal weights follow `(4 + a) / (deg_j + a)`, where `deg_j` counts the
/// difference terms touching pixel `j`, so border pixels get larger steps.
/// Dual weights are constant per block with `σ₁ / σ₂ = box_ratio`. The primal
/// weights are then scaled so that `μ = target_mu`, and the dual weights so
/// that `ζ = target_zeta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricHeuristic {
    pub boundary_shift: f64,
    pub box_ratio: f64,
    pub target_mu: f64,
    pub target_zeta: f64,
}

impl Default for MetricHeuristic {
    fn default() -> Self {
        MetricHeuristic {
            boundary_shift: 0.0,
            box_ratio: 0.03,
            target_mu: 1.4,
            target_zeta: 0.02,
        }
    }
}

/// Weight images `(primal, box_dual, tv_dual)` from [`MetricHeuristic`].
pub fn heuristic_weights(
    r: &Restoration,
    problem: &CompositeProblem,
    heur: MetricHeuristic,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !(heur.boundary_shift >= 0.0 && heur.box_ratio > 0.0 && heur.target_mu > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid metric heuristic {heur:?}"
        )));
    }
    if !(heur.target_zeta > 0.0 && heur.target_zeta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target zeta must lie in ]0, 1[, got {}",
            heur.target_zeta
        )));
    }
    let (w, h) = (r.width(), r.height());
    let n = w * h;
    check_len("restoration problem", n, problem.dim())?;
    let a = heur.boundary_shift;
    let mut primal = Vec::with_capacity(n);
    for row in 0..h {
        for col in 0..w {
            let deg = [col + 1 < w, col > 0, row + 1 < h, row > 0]
                .iter()
                .filter(|&&b| b)
                .count() as f64;
            primal.push(if deg + a > 0.0 {
                (4.0 + a) / (deg + a)
            } else {
                1.0
            });
        }
    }
    let box_dual = vec![heur.box_ratio; n];
    let tv_dual = vec![1.0; n];

    let report = validate_pd2(problem, &diagonal_params(&primal, &box_dual, &tv_dual)?)?;
    if !(report.mu > 0.0) {
        return Err(Error::Structural(
            "smooth term has zero curvature under the metric".into(),
        ));
    }
    let cu = heur.target_mu / report.mu;
    primal.iter_mut().for_each(|u| *u *= cu);
    // Block norms scale linearly in each metric.
    let coupling: f64 = report.block_norms_sq.iter().sum::<f64>() * cu;
    let cs = (1.0 - heur.target_zeta) / coupling;
    Ok((
        primal,
        box_dual.into_iter().map(|s| s * cs).collect(),
        tv_dual.into_iter().map(|s| s * cs).collect(),
    ))
}
