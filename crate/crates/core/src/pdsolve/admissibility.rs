use std::fmt;

use super::params::PdParams;
use super::problem::CompositeProblem;
use crate::error::Result;
use crate::funcs::{lipschitz_under_metric, InfConvTerm, SmoothTerm};
use crate::linop::{LinearMap, NormOptions};

/// Margin for the strict `> ½` test in floating point.
pub const STRICT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// First primal-dual class (primal prox, then dual update at `2p − x`).
    Pd1,
    /// Second primal-dual class (`f = 0`, primal correction after the duals).
    Pd2,
    /// Variable-metric forward-backward on the primal, with every
    /// `g_i ▫ ℓ_i` handled as a smooth Moreau envelope.
    ForwardBackward,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pd1 => "PD1",
            Algorithm::Pd2 => "PD2",
            Algorithm::ForwardBackward => "FB",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Step-size admissibility for a fixed metric choice.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub algorithm: Algorithm,
    /// `(Σ‖√U_i L_i √U‖²)^{-1/2} − 1` (PD1).
    pub delta: Option<f64>,
    /// `1 − Σ‖√U_i L_i √U‖²` (PD2).
    pub zeta: Option<f64>,
    /// Lipschitz constant of `√U ∇h √U`.
    pub mu: f64,
    /// Lipschitz constants of `√U_i ∇ℓ_i* √U_i`.
    pub nu: Vec<f64>,
    /// `‖√U_i L_i √U‖²` for PD1/PD2, `‖L_i √U‖²` for FB.
    pub block_norms_sq: Vec<f64>,
    pub condition_lhs: f64,
    pub admissible: bool,
    /// All constants came from converged estimates (no user attestations).
    pub certified: bool,
    pub violations: Vec<String>,
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algorithm = {}", self.algorithm)?;
        if let Some(d) = self.delta {
            writeln!(f, "delta = {d}")?;
        }
        if let Some(z) = self.zeta {
            writeln!(f, "zeta = {z}")?;
        }
        writeln!(f, "mu = {}", self.mu)?;
        for (i, nu) in self.nu.iter().enumerate() {
            writeln!(f, "nu_{} = {nu}", i + 1)?;
        }
        for (i, n) in self.block_norms_sq.iter().enumerate() {
            writeln!(f, "block_norm_sq_{} = {n}", i + 1)?;
        }
        writeln!(f, "condition_lhs = {}", self.condition_lhs)?;
        writeln!(f, "certified = {}", self.certified)?;
        writeln!(f, "admissible = {}", self.admissible)?;
        for v in &self.violations {
            writeln!(f, "violation = {v}")?;
        }
        Ok(())
    }
}

pub fn validate(
    algorithm: Algorithm,
    problem: &CompositeProblem,
    params: &PdParams,
) -> Result<AdmissibilityReport> {
    match algorithm {
        Algorithm::Pd1 => validate_pd1(problem, params),
        Algorithm::Pd2 => validate_pd2(problem, params),
        Algorithm::ForwardBackward => validate_fb(problem, params),
    }
}

struct Constants {
    mu: f64,
    nu: Vec<f64>,
    norms_sq: Vec<f64>,
    certified: bool,
}

fn similarity_norm_sq(
    op: &LinearMap,
    left: Option<&LinearMap>,
    right: &LinearMap,
    opts: NormOptions,
) -> Result<(f64, bool)> {
    let mut m = LinearMap::compose(op, right)?;
    if let Some(l) = left {
        m = LinearMap::compose(l, &m)?;
    }
    let est = m.estimate_norm(opts.tol, opts.max_iter, opts.seed)?;
    Ok((est.value * est.value, est.is_upper_bound))
}

fn constants(
    problem: &CompositeProblem,
    params: &PdParams,
    with_dual_metric: bool,
) -> Result<Constants> {
    params.check(problem)?;
    let opts = params.norm_options;
    let mu = lipschitz_under_metric(&problem.h, &params.primal_metric, opts)?;
    let sqrt_u = params.primal_metric.sqrt_map();
    let mut certified = mu.certified;
    let mut nu = Vec::with_capacity(problem.blocks.len());
    let mut norms_sq = Vec::with_capacity(problem.blocks.len());
    for (b, m) in problem.blocks.iter().zip(&params.dual_metrics) {
        let ell_conj = match b.ell {
            InfConvTerm::IndicatorZero => SmoothTerm::Zero,
            InfConvTerm::Quadratic { nu } => {
                SmoothTerm::squared_distance(0.5 * nu, vec![0.0; b.dim()])?
            }
        };
        let bound = lipschitz_under_metric(&ell_conj, m, opts)?;
        certified &= bound.certified;
        nu.push(bound.value);
        let left = with_dual_metric.then(|| m.sqrt_map());
        let (n2, ok) = similarity_norm_sq(&b.op, left.as_ref(), &sqrt_u, opts)?;
        certified &= ok;
        norms_sq.push(n2);
    }
    Ok(Constants {
        mu: mu.value,
        nu,
        norms_sq,
        certified,
    })
}

fn max_of(first: f64, rest: &[f64]) -> f64 {
    rest.iter().cloned().fold(first, f64::max)
}

pub fn validate_pd1(problem: &CompositeProblem, params: &PdParams) -> Result<AdmissibilityReport> {
    let c = constants(problem, params, true)?;
    let total: f64 = c.norms_sq.iter().sum();
    let delta = total.powf(-0.5) - 1.0;
    let m = max_of(c.mu, &c.nu);
    let lhs = if m > 0.0 {
        delta / ((1.0 + delta) * m)
    } else if delta > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let mut violations = Vec::new();
    if !(delta > 0.0) {
        violations.push(format!("delta = {delta} must be positive"));
    }
    if !(lhs > 0.5 + STRICT_MARGIN) {
        violations.push(format!("condition value {lhs} must exceed 1/2"));
    }
    Ok(AdmissibilityReport {
        algorithm: Algorithm::Pd1,
        delta: Some(delta),
        zeta: None,
        mu: c.mu,
        nu: c.nu,
        block_norms_sq: c.norms_sq,
        condition_lhs: lhs,
        admissible: violations.is_empty(),
        certified: c.certified,
        violations,
    })
}

pub fn validate_pd2(problem: &CompositeProblem, params: &PdParams) -> Result<AdmissibilityReport> {
    let c = constants(problem, params, true)?;
    let zeta = 1.0 - c.norms_sq.iter().sum::<f64>();
    let m = max_of(zeta * c.mu, &c.nu);
    let lhs = if m > 0.0 {
        zeta / m
    } else if zeta > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    let mut violations = Vec::new();
    if !problem.f.is_zero() {
        violations.push("PD2 requires f = 0".to_string());
    }
    if !(zeta > 0.0) {
        violations.push(format!("zeta = {zeta} must be positive"));
    }
    if !(lhs > 0.5 + STRICT_MARGIN) {
        violations.push(format!("condition value {lhs} must exceed 1/2"));
    }
    Ok(AdmissibilityReport {
        algorithm: Algorithm::Pd2,
        delta: None,
        zeta: Some(zeta),
        mu: c.mu,
        nu: c.nu,
        block_norms_sq: c.norms_sq,
        condition_lhs: lhs,
        admissible: violations.is_empty(),
        certified: c.certified,
        violations,
    })
}

/// Forward-backward with unit step: the smooth part
/// `h + Σ (g_i ▫ ℓ_i)(L_i · − r_i)` has a preconditioned gradient that is
/// `1/L`-cocoercive with `L = μ + Σ ‖L_i √U‖² / ν_i`; the check is `β = 1/L > ½`.
pub fn validate_fb(problem: &CompositeProblem, params: &PdParams) -> Result<AdmissibilityReport> {
    let c = constants(problem, params, false)?;
    let mut violations = Vec::new();
    let mut lipschitz = c.mu;
    let mut raw_nu = Vec::with_capacity(problem.blocks.len());
    for (i, (b, n2)) in problem.blocks.iter().zip(&c.norms_sq).enumerate() {
        match b.ell {
            InfConvTerm::Quadratic { nu } => {
                lipschitz += n2 / nu;
                raw_nu.push(nu);
            }
            InfConvTerm::IndicatorZero => {
                violations.push(format!(
                    "block {} is not smooth: FB needs a quadratic kernel",
                    i + 1
                ));
                raw_nu.push(0.0);
            }
        }
    }
    let beta = if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        f64::INFINITY
    };
    if violations.is_empty() && !(beta > 0.5 + STRICT_MARGIN) {
        violations.push(format!(
            "cocoercivity constant {beta} must exceed 1/2 for a unit step"
        ));
    }
    Ok(AdmissibilityReport {
        algorithm: Algorithm::ForwardBackward,
        delta: None,
        zeta: None,
        mu: c.mu,
        nu: raw_nu,
        block_norms_sq: c.norms_sq,
        condition_lhs: beta,
        admissible: violations.is_empty(),
        certified: c.certified,
        violations,
    })
}
