use std::fmt;
use std::sync::Arc;

use super::metric::DiagonalMetric;
use crate::error::{check_len, Error, Result};
use crate::linop::{LinearMap, NormOptions};

/// Convex differentiable term with a Lipschitz gradient.
#[derive(Clone)]
pub enum SmoothTerm {
    Zero,
    /// `Σ_k w_k ‖A_k x − t_k‖²`.
    Quadratic(Vec<QuadraticPart>),
    Custom(CustomSmooth),
}

#[derive(Debug, Clone)]
pub struct QuadraticPart {
    pub weight: f64,
    pub op: LinearMap,
    pub target: Vec<f64>,
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied smooth term. The Lipschitz constant is taken on trust.
#[derive(Clone)]
pub struct CustomSmooth {
    pub dim: usize,
    pub value: Arc<ValueFn>,
    pub gradient: Arc<GradFn>,
    pub lipschitz: f64,
}

impl fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothTerm::Zero => write!(f, "Zero"),
            SmoothTerm::Quadratic(parts) => f.debug_tuple("Quadratic").field(parts).finish(),
            SmoothTerm::Custom(c) => f
                .debug_struct("Custom")
                .field("dim", &c.dim)
                .field("lipschitz", &c.lipschitz)
                .finish(),
        }
    }
}

impl QuadraticPart {
    pub fn new(weight: f64, op: LinearMap, target: Vec<f64>) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quadratic weight must be nonnegative, got {weight}"
            )));
        }
        check_len("quadratic target", op.codomain_dim(), target.len())?;
        Ok(QuadraticPart { weight, op, target })
    }
}

impl SmoothTerm {
    pub fn quadratic(parts: Vec<QuadraticPart>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| {
            Error::InvalidArgument("quadratic term needs at least one part".into())
        })?;
        for p in &parts {
            check_len(
                "quadratic part domain",
                first.op.domain_dim(),
                p.op.domain_dim(),
            )?;
        }
        Ok(SmoothTerm::Quadratic(parts))
    }

    /// `weight · ‖x − target‖²`.
    pub fn squared_distance(weight: f64, target: Vec<f64>) -> Result<Self> {
        let n = target.len();
        Self::quadratic(vec![QuadraticPart::new(
            weight,
            LinearMap::identity(n),
            target,
        )?])
    }

    pub fn custom(
        dim: usize,
        lipschitz: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant must be nonnegative, got {lipschitz}"
            )));
        }
        Ok(SmoothTerm::Custom(CustomSmooth {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz,
        }))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SmoothTerm::Zero => None,
            SmoothTerm::Quadratic(parts) => Some(parts[0].op.domain_dim()),
            SmoothTerm::Custom(c) => Some(c.dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SmoothTerm::Zero)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_len("smooth term argument", d, len),
            None => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(match self {
            SmoothTerm::Zero => 0.0,
            SmoothTerm::Quadratic(parts) => parts
                .iter()
                .map(|p| {
                    let mut r = vec![0.0; p.target.len()];
                    p.op.apply_into(x, &mut r);
                    p.weight
                        * r.iter()
                            .zip(&p.target)
                            .map(|(a, t)| (a - t) * (a - t))
                            .sum::<f64>()
                })
                .sum(),
            SmoothTerm::Custom(c) => (c.value)(x),
        })
    }

    /// `out = ∇h(x)`. Lengths must already be validated.
    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            SmoothTerm::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            SmoothTerm::Quadratic(parts) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut back = vec![0.0; x.len()];
                for p in parts {
                    let mut r = vec![0.0; p.target.len()];
                    p.op.apply_into(x, &mut r);
                    let scale = 2.0 * p.weight;
                    for (ri, t) in r.iter_mut().zip(&p.target) {
                        *ri = scale * (*ri - t);
                    }
                    p.op.adjoint_into(&r, &mut back);
                    for (o, b) in out.iter_mut().zip(&back) {
                        *o += b;
                    }
                }
            }
            SmoothTerm::Custom(c) => out.copy_from_slice(&(c.gradient)(x)),
        }
    }

    /// Certified-when-converged Lipschitz constant of `∇h` in the Euclidean
    /// metric.
    pub fn lipschitz(&self, opts: NormOptions) -> Result<LipschitzBound> {
        match self.dim() {
            Some(d) => lipschitz_under_metric(self, &DiagonalMetric::scalar(d, 1.0)?, opts),
            None => Ok(LipschitzBound {
                value: 0.0,
                certified: true,
            }),
        }
    }
}

pub fn gradient(h: &SmoothTerm, x: &[f64]) -> Result<Vec<f64>> {
    h.check_dim(x.len())?;
    let mut out = vec![0.0; x.len()];
    h.gradient_into(x, &mut out);
    check_len("custom gradient output", x.len(), out.len())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    pub value: f64,
    /// False when the value came from a user attestation or an unconverged
    /// power iteration.
    pub certified: bool,
}

/// Lipschitz constant of `U^{1/2} ∘ ∇h ∘ U^{1/2}`.
///
/// For quadratic `h` with Hessian `Q = Σ 2 w_k A_k* A_k` this is `‖√U Q √U‖`,
/// the top eigenvalue of `M* M` with `M = [√(2 w_k) A_k √U]_k`, inflated by
/// `1 + tol`. Custom terms fall back to `lipschitz · max(U)`.
pub fn lipschitz_under_metric(
    h: &SmoothTerm,
    metric: &DiagonalMetric,
    opts: NormOptions,
) -> Result<LipschitzBound> {
    match h {
        SmoothTerm::Zero => Ok(LipschitzBound {
            value: 0.0,
            certified: true,
        }),
        SmoothTerm::Custom(c) => {
            check_len("metric for smooth term", c.dim, metric.dim())?;
            Ok(LipschitzBound {
                value: c.lipschitz * metric.max_weight(),
                certified: false,
            })
        }
        SmoothTerm::Quadratic(parts) => {
            check_len(
                "metric for smooth term",
                parts[0].op.domain_dim(),
                metric.dim(),
            )?;
            let sqrt_u = metric.sqrt_map();
            let mut rows = Vec::with_capacity(parts.len());
            for p in parts {
                let scaled =
                    LinearMap::scaled_identity(p.op.codomain_dim(), (2.0 * p.weight).sqrt());
                let inner = LinearMap::compose(&p.op, &sqrt_u)?;
                rows.push(LinearMap::compose(&scaled, &inner)?);
            }
            let m = LinearMap::stack(rows)?;
            let est = m.top_eigen_of_gram(opts.tol, opts.max_iter, opts.seed);
            Ok(LipschitzBound {
                value: est.eigenvalue * (1.0 + opts.tol),
                certified: est.converged,
            })
        }
    }
}
