use super::params::{PdParams, StepErrors};
use super::problem::CompositeProblem;
use crate::error::{check_len, Error, Result};
use crate::funcs::prox::prox_weighted;
use crate::funcs::DiagonalMetric;
use crate::linop::LinearMap;

/// Self-adjoint positive definite operator used as the variable metric `V`.
pub trait MetricOperator {
    fn dim(&self) -> usize;
    fn apply_metric(&self, x: &[f64]) -> Vec<f64>;
}

impl MetricOperator for DiagonalMetric {
    fn dim(&self) -> usize {
        DiagonalMetric::dim(self)
    }

    fn apply_metric(&self, x: &[f64]) -> Vec<f64> {
        self.weights().iter().zip(x).map(|(w, xi)| w * xi).collect()
    }
}

/// A square map assumed self-adjoint and positive definite.
impl MetricOperator for LinearMap {
    fn dim(&self) -> usize {
        self.domain_dim()
    }

    fn apply_metric(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(x, &mut out);
        out
    }
}

/// One variable-metric forward-backward step
///
/// ```text
/// y  = x − γ V (B x + b)
/// x⁺ = x + λ (J_{γVA}(y) + a − x)
/// ```
///
/// `resolvent(γ, V, y)` must return `J_{γVA}(y)`. `beta` is the cocoercivity
/// constant of `V^{1/2} B V^{1/2}`; the step is rejected unless
/// `γ ∈ ]0, 2β[` and `λ ∈ ]0, 1]`.
#[allow(clippy::too_many_arguments)]
pub fn fb_step<M: MetricOperator + ?Sized>(
    x: &[f64],
    mut forward: impl FnMut(&[f64]) -> Vec<f64>,
    mut resolvent: impl FnMut(f64, &M, &[f64]) -> Vec<f64>,
    metric: &M,
    gamma: f64,
    beta: f64,
    lambda: f64,
    a: Option<&[f64]>,
    b: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 2.0 * beta) {
        return Err(Error::InvalidArgument(format!(
            "step {gamma} outside ]0, 2β[ with β = {beta}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation must lie in ]0, 1], got {lambda}"
        )));
    }
    check_len("forward-backward metric", x.len(), metric.dim())?;
    let mut bx = forward(x);
    check_len("forward operator output", x.len(), bx.len())?;
    if let Some(b) = b {
        check_len("forward error", x.len(), b.len())?;
        for (v, e) in bx.iter_mut().zip(b) {
            *v += e;
        }
    }
    let vbx = metric.apply_metric(&bx);
    let y: Vec<f64> = x.iter().zip(&vbx).map(|(xi, vi)| xi - gamma * vi).collect();
    let mut r = resolvent(gamma, metric, &y);
    check_len("resolvent output", x.len(), r.len())?;
    if let Some(a) = a {
        check_len("resolvent error", x.len(), a.len())?;
        for (v, e) in r.iter_mut().zip(a) {
            *v += e;
        }
    }
    Ok(x.iter()
        .zip(&r)
        .map(|(xi, ri)| xi + lambda * (ri - xi))
        .collect())
}

/// Smooth part of the primal objective when every kernel is quadratic:
/// `∇h(x) − z + Σ L_i* ∇(g_i ▫ ℓ_i)(L_i x − r_i)`.
pub(crate) fn smooth_gradient(problem: &CompositeProblem, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    problem.h.gradient_into(x, &mut g);
    for (gi, zi) in g.iter_mut().zip(&problem.z) {
        *gi -= zi;
    }
    let mut back = vec![0.0; x.len()];
    for (i, b) in problem.blocks.iter().enumerate() {
        let mut u = vec![0.0; b.dim()];
        b.op.apply_into(x, &mut u);
        for (ui, ri) in u.iter_mut().zip(&b.offset) {
            *ui -= ri;
        }
        let env_grad = b
            .ell
            .infimal_gradient(&b.g, &u)?
            .ok_or_else(|| Error::Structural(format!("block {} has no smooth kernel", i + 1)))?;
        b.op.adjoint_into(&env_grad, &mut back);
        for (gi, bi) in g.iter_mut().zip(&back) {
            *gi += bi;
        }
    }
    Ok(g)
}

/// Forward-backward iteration on the primal with `A = ∂f`, `V = U` and unit
/// step, through [`fb_step`]. `beta` is the cocoercivity constant from the
/// admissibility report.
pub(crate) fn fb_primal_step(
    x: &[f64],
    problem: &CompositeProblem,
    params: &PdParams,
    beta: f64,
    errors: &StepErrors,
) -> Result<Vec<f64>> {
    let mut failure = None;
    let forward = |v: &[f64]| match smooth_gradient(problem, v) {
        Ok(g) => g,
        Err(e) => {
            failure = Some(e);
            vec![0.0; v.len()]
        }
    };
    let resolvent = |gamma: f64, m: &DiagonalMetric, y: &[f64]| {
        let pre: Vec<f64> = m.weights().iter().map(|w| gamma * w).collect();
        let mut out = vec![0.0; y.len()];
        // ∂f is the only set-valued part; its prox cannot fail for the catalog
        // terms accepted by CompositeProblem.
        prox_weighted(&problem.f, &pre, y, &mut out).expect("primal prox");
        out
    };
    let next = fb_step(
        x,
        forward,
        resolvent,
        &params.primal_metric,
        1.0,
        beta,
        params.lambda,
        errors.a.as_deref(),
        errors.c.as_deref(),
    );
    match failure {
        Some(e) => Err(e),
        None => next,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_resolvent(_: f64, _: &DiagonalMetric, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }

    #[test]
    fn zero_forward_and_identity_resolvent_is_fixed() {
        let v = DiagonalMetric::scalar(2, 1.0).unwrap();
        let x = [1.0, -3.0];
        let out = fb_step(
            &x,
            |z| vec![0.0; z.len()],
            identity_resolvent,
            &v,
            1.0,
            1.0,
            1.0,
            None,
            None,
        )
        .unwrap();
        assert_eq!(out, x.to_vec());
    }

    #[test]
    fn projected_gradient_step() {
        // A = ∂ι_[0,1], B = ∇½(· − 2)², x = 0: clamp(0 − (0 − 2)) = 1
        let v = DiagonalMetric::scalar(1, 1.0).unwrap();
        let clamp = |_: f64, _: &DiagonalMetric, y: &[f64]| vec![y[0].clamp(0.0, 1.0)];
        let out = fb_step(
            &[0.0],
            |z| vec![z[0] - 2.0],
            clamp,
            &v,
            1.0,
            1.0,
            1.0,
            None,
            None,
        )
        .unwrap();
        assert_eq!(out, vec![1.0]);
        let half = fb_step(
            &[0.0],
            |z| vec![z[0] - 2.0],
            clamp,
            &v,
            1.0,
            1.0,
            0.5,
            None,
            None,
        )
        .unwrap();
        assert_eq!(half, vec![0.5]);
    }

    #[test]
    fn step_range_is_enforced() {
        let v = DiagonalMetric::scalar(1, 1.0).unwrap();
        let f = |z: &[f64]| z.to_vec();
        assert!(fb_step(&[0.0], f, identity_resolvent, &v, 2.0, 1.0, 1.0, None, None).is_err());
        assert!(fb_step(&[0.0], f, identity_resolvent, &v, 0.0, 1.0, 1.0, None, None).is_err());
        assert!(fb_step(&[0.0], f, identity_resolvent, &v, 1.0, 1.0, 0.0, None, None).is_err());
        assert!(fb_step(
            &[0.0, 1.0],
            f,
            identity_resolvent,
            &v,
            1.0,
            1.0,
            1.0,
            None,
            None
        )
        .is_err());
    }

    #[test]
    fn errors_enter_where_expected() {
        let v = DiagonalMetric::scalar(1, 0.5).unwrap();
        let out = fb_step(
            &[1.0],
            |_| vec![0.0],
            identity_resolvent,
            &v,
            1.0,
            1.0,
            1.0,
            Some(&[0.25]),
            Some(&[2.0]),
        )
        .unwrap();
        // y = 1 − 0.5·2 = 0, then + a
        assert_eq!(out, vec![0.25]);
    }

    #[test]
    fn dense_metric_operator() {
        let m = LinearMap::dense(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let out = fb_step(
            &[0.0, 0.0],
            |_| vec![1.0, 0.0],
            |_: f64, _: &LinearMap, y: &[f64]| y.to_vec(),
            &m,
            0.5,
            1.0,
            1.0,
            None,
            None,
        )
        .unwrap();
        assert_eq!(out, vec![-1.0, -0.5]);
    }
}
