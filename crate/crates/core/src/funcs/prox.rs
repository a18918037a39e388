use std::sync::Arc;

use super::metric::{first_nonconstant_block, BlockStructure, DiagonalMetric};
use crate::error::{check_len, Error, Result};

/// Relative slack when testing membership in a Euclidean ball, so that points
/// produced by radial projection count as feasible.
const BALL_SLACK: f64 = 1e-12;

/// Proper lower semicontinuous convex function with a closed-form prox under
/// diagonal metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxTerm {
    /// `f ≡ 0`.
    Zero,
    /// Indicator of the box `[lo, hi]^n`.
    Box { lo: f64, hi: f64 },
    /// `κ Σ_b ‖x_b‖₂` over the blocks of a [`BlockStructure`].
    ScaledL12 {
        kappa: f64,
        blocks: Arc<BlockStructure>,
    },
    /// Indicator of `{0}`.
    IndicatorZero,
    /// Fenchel conjugate of the child.
    ConjugateOf(Box<ProxTerm>),
}

impl ProxTerm {
    pub fn box_indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("empty box [{lo}, {hi}]")));
        }
        Ok(ProxTerm::Box { lo, hi })
    }

    pub fn scaled_l12(kappa: f64, blocks: impl Into<Arc<BlockStructure>>) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "l1,2 weight must be nonnegative, got {kappa}"
            )));
        }
        Ok(ProxTerm::ScaledL12 {
            kappa,
            blocks: blocks.into(),
        })
    }

    pub fn conjugate(&self) -> ProxTerm {
        ProxTerm::ConjugateOf(Box::new(self.clone()))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProxTerm::Zero)
    }

    /// Coordinate count the term is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ProxTerm::ScaledL12 { blocks, .. } => Some(blocks.dim()),
            ProxTerm::ConjugateOf(c) => c.fixed_dim(),
            _ => None,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_len("l1,2 block structure", d, len),
            None => Ok(()),
        }
    }

    /// Function value; `+∞` outside the domain.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            ProxTerm::Zero => 0.0,
            ProxTerm::Box { lo, hi } => indicator(x.iter().all(|v| v >= lo && v <= hi)),
            ProxTerm::ScaledL12 { kappa, blocks } => {
                kappa * blocks.groups().map(|g| block_norm(x, g)).sum::<f64>()
            }
            ProxTerm::IndicatorZero => indicator(x.iter().all(|&v| v == 0.0)),
            ProxTerm::ConjugateOf(child) => match child.as_ref() {
                ProxTerm::Zero => indicator(x.iter().all(|&v| v == 0.0)),
                // support function of the box
                ProxTerm::Box { lo, hi } => x.iter().map(|&v| (lo * v).max(hi * v)).sum(),
                // indicator of the product of κ-balls
                ProxTerm::ScaledL12 { kappa, blocks } => {
                    let radius = kappa * (1.0 + BALL_SLACK);
                    indicator(blocks.groups().all(|g| block_norm(x, g) <= radius))
                }
                ProxTerm::IndicatorZero => 0.0,
                ProxTerm::ConjugateOf(grandchild) => grandchild.eval_unchecked(x),
            },
        }
    }
}

fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::INFINITY
    }
}

fn block_norm(x: &[f64], group: &[usize]) -> f64 {
    group.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
}

/// `argmin_y f(y) + ½ ‖x − y‖²_{U⁻¹}` for the algorithm preconditioner `U`.
pub fn prox_in_metric(f: &ProxTerm, metric: &DiagonalMetric, x: &[f64]) -> Result<Vec<f64>> {
    check_len("prox argument", metric.dim(), x.len())?;
    f.check_dim(x.len())?;
    let mut out = vec![0.0; x.len()];
    prox_weighted(f, metric.weights(), x, &mut out)?;
    Ok(out)
}

/// `prox^{U⁻¹}_{f*}(v)`, through the generalized Moreau decomposition
/// `v − U prox^{U}_f(U⁻¹ v)`.
pub fn prox_conjugate_in_metric(
    f: &ProxTerm,
    metric: &DiagonalMetric,
    v: &[f64],
) -> Result<Vec<f64>> {
    check_len("prox argument", metric.dim(), v.len())?;
    f.check_dim(v.len())?;
    let mut out = vec![0.0; v.len()];
    prox_conjugate_weighted(f, metric.weights(), v, &mut out)?;
    Ok(out)
}

/// Prox with preconditioner weights `pre` (metric `diag(pre)⁻¹`).
pub(crate) fn prox_weighted(f: &ProxTerm, pre: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
    match f {
        ProxTerm::Zero => out.copy_from_slice(x),
        ProxTerm::Box { lo, hi } => {
            for (o, v) in out.iter_mut().zip(x) {
                *o = v.clamp(*lo, *hi);
            }
        }
        ProxTerm::IndicatorZero => out.iter_mut().for_each(|o| *o = 0.0),
        ProxTerm::ScaledL12 { kappa, blocks } => {
            if let Some(block) = first_nonconstant_block(pre, blocks) {
                return Err(Error::MetricNotBlockConstant { block });
            }
            for g in blocks.groups() {
                let threshold = kappa * pre[g[0]];
                let n = block_norm(x, g);
                let shrink = if n > threshold {
                    1.0 - threshold / n
                } else {
                    0.0
                };
                for &i in g {
                    out[i] = shrink * x[i];
                }
            }
        }
        ProxTerm::ConjugateOf(child) => prox_conjugate_weighted(child, pre, x, out)?,
    }
    Ok(())
}

pub(crate) fn prox_conjugate_weighted(
    f: &ProxTerm,
    pre: &[f64],
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    match f {
        // Closed forms that skip the decomposition.
        ProxTerm::Zero => out.iter_mut().for_each(|o| *o = 0.0),
        ProxTerm::IndicatorZero => out.copy_from_slice(v),
        ProxTerm::ConjugateOf(child) => prox_weighted(child, pre, v, out)?,
        _ => {
            let inv: Vec<f64> = pre.iter().map(|w| 1.0 / w).collect();
            let scaled: Vec<f64> = v.iter().zip(&inv).map(|(a, b)| a * b).collect();
            prox_weighted(f, &inv, &scaled, out)?;
            for ((o, vi), w) in out.iter_mut().zip(v).zip(pre) {
                *o = vi - w * *o;
            }
        }
    }
    Ok(())
}

/// Kernel `ℓ` of the infimal convolution `g ▫ ℓ` in a dual block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfConvTerm {
    /// `ℓ = ι_{0}`, so `g ▫ ℓ = g` and `∇ℓ* ≡ 0`.
    IndicatorZero,
    /// `ℓ = ‖·‖² / (2ν)`, so `∇ℓ* = ν Id` and `g ▫ ℓ` is the Moreau envelope
    /// of `g` with parameter `ν`.
    Quadratic { nu: f64 },
}

impl InfConvTerm {
    pub fn quadratic(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quadratic kernel needs nu > 0, got {nu}"
            )));
        }
        Ok(InfConvTerm::Quadratic { nu })
    }

    /// Lipschitz constant of `∇ℓ*`.
    pub fn conjugate_lipschitz(&self) -> f64 {
        match self {
            InfConvTerm::IndicatorZero => 0.0,
            InfConvTerm::Quadratic { nu } => *nu,
        }
    }

    /// `out = ∇ℓ*(v)`.
    pub(crate) fn conjugate_gradient_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            InfConvTerm::IndicatorZero => out.iter_mut().for_each(|o| *o = 0.0),
            InfConvTerm::Quadratic { nu } => {
                for (o, vi) in out.iter_mut().zip(v) {
                    *o = nu * vi;
                }
            }
        }
    }

    pub fn conjugate_gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.conjugate_gradient_into(v, &mut out);
        out
    }

    /// `(g ▫ ℓ)(u)`.
    pub fn infimal_value(&self, g: &ProxTerm, u: &[f64]) -> Result<f64> {
        match self {
            InfConvTerm::IndicatorZero => g.eval(u),
            InfConvTerm::Quadratic { nu } => {
                g.check_dim(u.len())?;
                let mut p = vec![0.0; u.len()];
                prox_weighted(g, &vec![*nu; u.len()], u, &mut p)?;
                let dist2: f64 = u.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(g.eval_unchecked(&p) + dist2 / (2.0 * nu))
            }
        }
    }

    /// Gradient of the Moreau envelope `g ▫ ℓ` at `u`; `None` for the
    /// nonsmooth `ι_{0}` kernel.
    pub fn infimal_gradient(&self, g: &ProxTerm, u: &[f64]) -> Result<Option<Vec<f64>>> {
        match self {
            InfConvTerm::IndicatorZero => Ok(None),
            InfConvTerm::Quadratic { nu } => {
                g.check_dim(u.len())?;
                let mut p = vec![0.0; u.len()];
                prox_weighted(g, &vec![*nu; u.len()], u, &mut p)?;
                Ok(Some(u.iter().zip(&p).map(|(a, b)| (a - b) / nu).collect()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn id(dim: usize) -> DiagonalMetric {
        DiagonalMetric::scalar(dim, 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn box_prox_is_clamp_under_any_metric() {
        let f = ProxTerm::box_indicator(0.0, 1.0).unwrap();
        let m = DiagonalMetric::new(vec![0.1, 3.0, 7.0]).unwrap();
        assert_eq!(
            prox_in_metric(&f, &m, &[-3.0, 0.5, 7.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn zero_prox_is_identity() {
        let m = DiagonalMetric::new(vec![0.5, 2.0]).unwrap();
        assert_eq!(
            prox_in_metric(&ProxTerm::Zero, &m, &[1.5, -2.0]).unwrap(),
            vec![1.5, -2.0]
        );
    }

    #[test]
    fn l12_shrinkage() {
        let f = ProxTerm::scaled_l12(1.0, BlockStructure::single(2)).unwrap();
        let p = prox_in_metric(&f, &id(2), &[3.0, 4.0]).unwrap();
        assert!(close(&p, &[2.4, 3.2], 1e-15));
        // Inside the threshold the block collapses to zero.
        let p = prox_in_metric(&f, &id(2), &[0.3, 0.4]).unwrap();
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn l12_rejects_non_block_constant_metric() {
        let f = ProxTerm::scaled_l12(1.0, BlockStructure::single(2)).unwrap();
        let m = DiagonalMetric::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            prox_in_metric(&f, &m, &[1.0, 1.0]),
            Err(Error::MetricNotBlockConstant { block: 0 })
        ));
        assert!(prox_conjugate_in_metric(&f, &m, &[1.0, 1.0]).is_err());
        assert!(prox_in_metric(&f, &id(3), &[1.0; 3]).is_err());
    }

    #[test]
    fn conjugate_prox_examples() {
        let f = ProxTerm::scaled_l12(2.0, BlockStructure::single(2)).unwrap();
        let q = prox_conjugate_in_metric(&f, &id(2), &[3.0, 4.0]).unwrap();
        assert!(close(&q, &[1.2, 1.6], 1e-15));
        assert_eq!(
            prox_conjugate_in_metric(&ProxTerm::Zero, &id(2), &[3.0, 4.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let b = ProxTerm::box_indicator(0.0, 255.0).unwrap();
        assert_eq!(
            prox_conjugate_in_metric(&b, &id(1), &[-3.0]).unwrap(),
            vec![-3.0]
        );
    }

    #[test]
    fn box_support_prox_matches_ternary_search() {
        // f*(y) = 255 max(y, 0) in 1-D; minimize f*(y) + ½ (v − y)².
        let b = ProxTerm::box_indicator(0.0, 255.0).unwrap();
        for v in [-3.0, 100.0, 300.0] {
            let obj = |y: f64| b.conjugate().eval(&[y]).unwrap() + 0.5 * (v - y) * (v - y);
            let (mut lo, mut hi) = (-1000.0, 1000.0);
            for _ in 0..300 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if obj(m1) < obj(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let q = prox_conjugate_in_metric(&b, &id(1), &[v]).unwrap()[0];
            // Near the minimum the objective is flat to rounding, so compare values.
            let best = 0.5 * (lo + hi);
            assert!(obj(q) <= obj(best) + 1e-9, "v={v}: {q} vs {best}");
            assert!((q - best).abs() < 1e-4);
        }
    }

    #[test]
    fn conjugate_values() {
        let b = ProxTerm::box_indicator(-1.0, 2.0).unwrap();
        assert_eq!(b.conjugate().eval(&[1.0, -1.0]).unwrap(), 3.0);
        let ball = ProxTerm::scaled_l12(1.0, BlockStructure::single(2))
            .unwrap()
            .conjugate();
        assert_eq!(ball.eval(&[0.6, 0.8]).unwrap(), 0.0);
        assert_eq!(ball.eval(&[0.7, 0.8]).unwrap(), f64::INFINITY);
        assert_eq!(ProxTerm::Zero.conjugate().eval(&[0.0]).unwrap(), 0.0);
        assert_eq!(
            ProxTerm::Zero.conjugate().eval(&[1.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            ProxTerm::IndicatorZero.conjugate().eval(&[5.0]).unwrap(),
            0.0
        );
        assert_eq!(
            b.conjugate().conjugate().eval(&[3.0]).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn moreau_envelope_of_box() {
        let b = ProxTerm::box_indicator(0.0, 1.0).unwrap();
        let l = InfConvTerm::quadratic(0.5).unwrap();
        // distance² / (2ν) = 4 / 1
        assert!((l.infimal_value(&b, &[3.0]).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(l.infimal_gradient(&b, &[3.0]).unwrap().unwrap(), vec![4.0]);
        assert_eq!(
            InfConvTerm::IndicatorZero
                .infimal_value(&b, &[3.0])
                .unwrap(),
            f64::INFINITY
        );
        assert!(InfConvTerm::quadratic(0.0).is_err());
    }

    proptest! {
        #[test]
        fn l12_prox_preserves_block_direction(seed in 0u64..500, kappa in 0.0f64..3.0) {
            let blocks = BlockStructure::pixel_components(3, 2);
            let f = ProxTerm::scaled_l12(kappa, blocks.clone()).unwrap();
            let m = DiagonalMetric::block_constant(&blocks, &[0.5, 1.0, 2.0]).unwrap();
            let x = CounterRng::new(seed, 0).gauss_vec(6);
            let p = prox_in_metric(&f, &m, &x).unwrap();
            for g in blocks.groups() {
                let (a, b) = (g[0], g[1]);
                // p_b = t x_b with t >= 0
                prop_assert!((p[a] * x[b] - p[b] * x[a]).abs() < 1e-12);
                prop_assert!(p[a] * x[a] + p[b] * x[b] >= 0.0);
                prop_assert!(p[a].abs() <= x[a].abs() + 1e-15);
            }
        }

        #[test]
        fn prox_is_nonexpansive_in_metric_norm(seed in 0u64..500) {
            let rng = CounterRng::new(seed, 0);
            let w: Vec<f64> = (0..4).map(|i| 0.1 + 3.0 * rng.unit_at(i)).collect();
            let blocks = BlockStructure::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
            let wb = vec![w[0], w[0], w[2], w[2]];
            let cases = [
                (ProxTerm::box_indicator(-0.5, 0.5).unwrap(), DiagonalMetric::new(w.clone()).unwrap()),
                (ProxTerm::scaled_l12(0.7, blocks.clone()).unwrap(), DiagonalMetric::new(wb.clone()).unwrap()),
                (ProxTerm::scaled_l12(0.7, blocks).unwrap().conjugate(), DiagonalMetric::new(wb).unwrap()),
                (ProxTerm::box_indicator(-0.5, 0.5).unwrap().conjugate(), DiagonalMetric::new(w).unwrap()),
            ];
            let x = CounterRng::new(seed, 1).gauss_vec(4);
            let y = CounterRng::new(seed, 2).gauss_vec(4);
            for (f, m) in &cases {
                let px = prox_in_metric(f, m, &x).unwrap();
                let py = prox_in_metric(f, m, &y).unwrap();
                let metric_norm = |a: &[f64], b: &[f64]| -> f64 {
                    a.iter().zip(b).zip(m.weights()).map(|((ai, bi), wi)| (ai - bi).powi(2) / wi).sum::<f64>().sqrt()
                };
                prop_assert!(metric_norm(&px, &py) <= metric_norm(&x, &y) + 1e-12);
            }
        }
    }
}
