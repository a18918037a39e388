use crate::error::{check_len, Error, Result};
use crate::funcs::{InfConvTerm, ProxTerm, SmoothTerm};
use crate::linop::{dot, LinearMap};
use crate::rng::CounterRng;

/// One composite term `(g ▫ ℓ)(L x − r)`.
#[derive(Debug, Clone)]
pub struct DualBlock {
    pub g: ProxTerm,
    pub ell: InfConvTerm,
    pub op: LinearMap,
    pub offset: Vec<f64>,
}

impl DualBlock {
    pub fn new(g: ProxTerm, ell: InfConvTerm, op: LinearMap, offset: Vec<f64>) -> Result<Self> {
        check_len("dual block offset", op.codomain_dim(), offset.len())?;
        if let Some(d) = g.fixed_dim() {
            check_len("dual block function", op.codomain_dim(), d)?;
        }
        Ok(DualBlock { g, ell, op, offset })
    }

    /// Block with `ℓ = ι_{0}` and `r = 0`.
    pub fn plain(g: ProxTerm, op: LinearMap) -> Result<Self> {
        let m = op.codomain_dim();
        Self::new(g, InfConvTerm::IndicatorZero, op, vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.op.codomain_dim()
    }
}

/// `minimize f(x) + Σ_i (g_i ▫ ℓ_i)(L_i x − r_i) + h(x) − <x, z>`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    dim: usize,
    pub f: ProxTerm,
    pub h: SmoothTerm,
    pub z: Vec<f64>,
    pub blocks: Vec<DualBlock>,
}

impl CompositeProblem {
    pub fn new(f: ProxTerm, h: SmoothTerm, z: Vec<f64>, blocks: Vec<DualBlock>) -> Result<Self> {
        let dim = z.len();
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "problem needs at least one dual block".into(),
            ));
        }
        if let Some(d) = f.fixed_dim() {
            check_len("primal function", dim, d)?;
        }
        if let Some(d) = h.dim() {
            check_len("smooth term", dim, d)?;
        }
        let probe = CounterRng::new(0x5eed, 0).gauss_vec(dim);
        for (i, b) in blocks.iter().enumerate() {
            check_len("dual block operator domain", dim, b.op.domain_dim())?;
            if b.op.apply(&probe)?.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "operator of block {i} is zero"
                )));
            }
        }
        Ok(CompositeProblem {
            dim,
            f,
            h,
            z,
            blocks,
        })
    }

    /// Problem with `z = 0`.
    pub fn without_linear_term(
        dim: usize,
        f: ProxTerm,
        h: SmoothTerm,
        blocks: Vec<DualBlock>,
    ) -> Result<Self> {
        Self::new(f, h, vec![0.0; dim], blocks)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dual_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(DualBlock::dim).collect()
    }

    /// Primal objective; `+∞` whenever an indicator is violated.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len("objective argument", self.dim, x.len())?;
        let mut total = self.f.eval(x)? + self.h.eval(x)? - dot(x, &self.z);
        for b in &self.blocks {
            let mut u = b.op.apply(x)?;
            for (ui, ri) in u.iter_mut().zip(&b.offset) {
                *ui -= ri;
            }
            total += b.ell.infimal_value(&b.g, &u)?;
        }
        Ok(total)
    }
}

/// Primal iterate and one dual iterate per block.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub n: usize,
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

impl SolverState {
    /// `x₀` given, `v₀ = 0`.
    pub fn new(problem: &CompositeProblem, x0: Vec<f64>) -> Result<Self> {
        check_len("initial primal iterate", problem.dim(), x0.len())?;
        Ok(SolverState {
            n: 0,
            x: x0,
            v: problem
                .dual_dims()
                .into_iter()
                .map(|d| vec![0.0; d])
                .collect(),
        })
    }

    pub fn with_duals(problem: &CompositeProblem, x0: Vec<f64>, v0: Vec<Vec<f64>>) -> Result<Self> {
        let state = SolverState { n: 0, x: x0, v: v0 };
        state.check(problem)?;
        Ok(state)
    }

    pub(crate) fn check(&self, problem: &CompositeProblem) -> Result<()> {
        check_len("primal iterate", problem.dim(), self.x.len())?;
        check_len("dual block count", problem.blocks.len(), self.v.len())?;
        for (v, b) in self.v.iter().zip(&problem.blocks) {
            check_len("dual iterate", b.dim(), v.len())?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.v.iter().flatten())
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcs::BlockStructure;

    #[test]
    fn objective_trivial_cases() {
        let p = CompositeProblem::without_linear_term(
            3,
            ProxTerm::Zero,
            SmoothTerm::Zero,
            vec![DualBlock::plain(ProxTerm::Zero, LinearMap::identity(3)).unwrap()],
        )
        .unwrap();
        assert_eq!(p.objective(&[1.0, -2.0, 3.0]).unwrap(), 0.0);

        let p = CompositeProblem::without_linear_term(
            2,
            ProxTerm::Zero,
            SmoothTerm::Zero,
            vec![DualBlock::plain(
                ProxTerm::box_indicator(0.0, 255.0).unwrap(),
                LinearMap::identity(2),
            )
            .unwrap()],
        )
        .unwrap();
        assert_eq!(p.objective(&[1.0, 256.0]).unwrap(), f64::INFINITY);
        assert_eq!(p.objective(&[1.0, 255.0]).unwrap(), 0.0);
    }

    #[test]
    fn objective_adds_every_term() {
        let g = ProxTerm::scaled_l12(2.0, BlockStructure::single(2)).unwrap();
        let p = CompositeProblem::new(
            ProxTerm::Zero,
            SmoothTerm::squared_distance(1.0, vec![1.0, 1.0]).unwrap(),
            vec![1.0, 0.0],
            vec![DualBlock::new(
                g,
                InfConvTerm::IndicatorZero,
                LinearMap::identity(2),
                vec![0.0, 1.0],
            )
            .unwrap()],
        )
        .unwrap();
        // ‖x−1‖² = 1, −<x,z> = 0, 2‖x − r‖ = 2·√(0+4)
        let x = [0.0, 3.0];
        assert!((p.objective(&x).unwrap() - (1.0 + 4.0 + 4.0)).abs() < 1e-14);
    }

    #[test]
    fn construction_errors() {
        let zero = LinearMap::dense(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(CompositeProblem::without_linear_term(
            2,
            ProxTerm::Zero,
            SmoothTerm::Zero,
            vec![DualBlock::plain(ProxTerm::Zero, zero).unwrap()]
        )
        .is_err());
        assert!(
            CompositeProblem::without_linear_term(2, ProxTerm::Zero, SmoothTerm::Zero, vec![])
                .is_err()
        );
        assert!(CompositeProblem::without_linear_term(
            2,
            ProxTerm::Zero,
            SmoothTerm::squared_distance(1.0, vec![0.0; 3]).unwrap(),
            vec![DualBlock::plain(ProxTerm::Zero, LinearMap::identity(2)).unwrap()]
        )
        .is_err());
        let blocks = BlockStructure::single(3);
        assert!(DualBlock::plain(
            ProxTerm::scaled_l12(1.0, blocks).unwrap(),
            LinearMap::identity(2)
        )
        .is_err());
    }
}
