//! Finite-dimensional linear operators with exact adjoints.
//!
//! A [`LinearMap`] is an immutable, cheaply clonable handle. Composite maps
//! (stacks, compositions, adjoint views) share their children, and the
//! spectral-norm estimate is cached on first request.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{check_len, Error, Result};
use crate::rng::CounterRng;

/// Direction of a forward-difference operator on a row-major image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Differences along a row: `x[r, c + 1] - x[r, c]`.
    Horizontal,
    /// Differences along a column: `x[r + 1, c] - x[r, c]`.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Identity,
    ScaledIdentity,
    Diagonal,
    Dense,
    Convolution2d,
    ForwardDifference2d,
    VerticalStack,
    Composition,
    AdjointView,
}

/// Result of a power-iteration estimate of the spectral norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// Estimated largest singular value, already multiplied by `1 + tol`.
    pub value: f64,
    pub is_upper_bound: bool,
    pub iterations_used: usize,
    /// Relative change of the singular-value estimate over the last iteration.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            tol: 1e-6,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone)]
pub struct LinearMap {
    node: Arc<Node>,
}

struct Node {
    domain: usize,
    codomain: usize,
    kind: Kind,
    norm_cache: OnceLock<NormEstimate>,
}

enum Kind {
    Identity,
    Scaled(f64),
    Diagonal(Vec<f64>),
    Dense(Vec<f64>),
    Conv {
        width: usize,
        height: usize,
        size: usize,
        taps: Vec<f64>,
    },
    Diff {
        width: usize,
        height: usize,
        axis: Axis,
    },
    Stack(Vec<LinearMap>),
    Compose {
        outer: LinearMap,
        inner: LinearMap,
    },
    Adjoint(LinearMap),
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMap")
            .field("kind", &self.kind())
            .field("domain_dim", &self.domain_dim())
            .field("codomain_dim", &self.codomain_dim())
            .finish()
    }
}

impl LinearMap {
    fn from_kind(domain: usize, codomain: usize, kind: Kind) -> Self {
        LinearMap {
            node: Arc::new(Node {
                domain,
                codomain,
                kind,
                norm_cache: OnceLock::new(),
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kind(dim, dim, Kind::Identity)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Self::from_kind(dim, dim, Kind::Scaled(scale))
    }

    pub fn diagonal(entries: Vec<f64>) -> Self {
        let n = entries.len();
        Self::from_kind(n, n, Kind::Diagonal(entries))
    }

    /// Dense matrix with `rows * cols` entries in row-major order.
    pub fn dense(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        check_len("dense matrix entries", rows * cols, entries.len())?;
        Ok(Self::from_kind(cols, rows, Kind::Dense(entries)))
    }

    /// Periodic 2-D convolution of a `width x height` row-major image with a
    /// square `size x size` kernel (row-major taps, centred).
    pub fn convolution_2d(
        width: usize,
        height: usize,
        size: usize,
        taps: Vec<f64>,
    ) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "convolution kernel size must be odd, got {size}"
            )));
        }
        check_len("convolution taps", size * size, taps.len())?;
        let n = width * height;
        Ok(Self::from_kind(
            n,
            n,
            Kind::Conv {
                width,
                height,
                size,
                taps,
            },
        ))
    }

    /// Forward differences with Neumann boundary: the difference leaving the
    /// last column (or row) is zero.
    pub fn forward_difference_2d(width: usize, height: usize, axis: Axis) -> Self {
        let n = width * height;
        Self::from_kind(
            n,
            n,
            Kind::Diff {
                width,
                height,
                axis,
            },
        )
    }

    /// Vertical stack `[L1; L2; ...]`; outputs are concatenated in list order.
    pub fn stack(maps: Vec<LinearMap>) -> Result<Self> {
        let first = maps.first().ok_or(Error::EmptyStack)?;
        let domain = first.domain_dim();
        for m in &maps {
            check_len("stacked operator domain", domain, m.domain_dim())?;
        }
        let codomain = maps.iter().map(LinearMap::codomain_dim).sum();
        Ok(Self::from_kind(domain, codomain, Kind::Stack(maps)))
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &LinearMap, inner: &LinearMap) -> Result<Self> {
        check_len("composition", outer.domain_dim(), inner.codomain_dim())?;
        Ok(Self::from_kind(
            inner.domain_dim(),
            outer.codomain_dim(),
            Kind::Compose {
                outer: outer.clone(),
                inner: inner.clone(),
            },
        ))
    }

    pub fn adjoint(&self) -> LinearMap {
        if let Kind::Adjoint(original) = &self.node.kind {
            return original.clone();
        }
        Self::from_kind(
            self.codomain_dim(),
            self.domain_dim(),
            Kind::Adjoint(self.clone()),
        )
    }

    pub fn domain_dim(&self) -> usize {
        self.node.domain
    }

    pub fn codomain_dim(&self) -> usize {
        self.node.codomain
    }

    pub fn kind(&self) -> MapKind {
        match &self.node.kind {
            Kind::Identity => MapKind::Identity,
            Kind::Scaled(_) => MapKind::ScaledIdentity,
            Kind::Diagonal(_) => MapKind::Diagonal,
            Kind::Dense(_) => MapKind::Dense,
            Kind::Conv { .. } => MapKind::Convolution2d,
            Kind::Diff { .. } => MapKind::ForwardDifference2d,
            Kind::Stack(_) => MapKind::VerticalStack,
            Kind::Compose { .. } => MapKind::Composition,
            Kind::Adjoint(_) => MapKind::AdjointView,
        }
    }

    /// Children of a vertical stack, if this is one.
    pub fn stack_children(&self) -> Option<&[LinearMap]> {
        match &self.node.kind {
            Kind::Stack(children) => Some(children),
            _ => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.domain_dim(), x.len())?;
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint_apply", self.codomain_dim(), y.len())?;
        let mut out = vec![0.0; self.domain_dim()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }

    /// Overwrites `out` with `L x`. Lengths must already be validated.
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.domain_dim());
        debug_assert_eq!(out.len(), self.codomain_dim());
        match &self.node.kind {
            Kind::Identity => out.copy_from_slice(x),
            Kind::Scaled(s) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = s * xi;
                }
            }
            Kind::Diagonal(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o = di * xi;
                }
            }
            Kind::Dense(a) => {
                let cols = self.domain_dim();
                for (o, row) in out.iter_mut().zip(a.chunks_exact(cols.max(1))) {
                    *o = dot(row, x);
                }
            }
            Kind::Conv {
                width,
                height,
                size,
                taps,
            } => periodic_filter(x, out, *width, *height, *size, taps, false),
            Kind::Diff {
                width,
                height,
                axis,
            } => diff_forward(x, out, *width, *height, *axis),
            Kind::Stack(children) => {
                let mut offset = 0;
                for child in children {
                    let len = child.codomain_dim();
                    child.apply_into(x, &mut out[offset..offset + len]);
                    offset += len;
                }
            }
            Kind::Compose { outer, inner } => {
                let mut tmp = vec![0.0; inner.codomain_dim()];
                inner.apply_into(x, &mut tmp);
                outer.apply_into(&tmp, out);
            }
            Kind::Adjoint(original) => original.adjoint_into(x, out),
        }
    }

    /// Overwrites `out` with `L* y`. Lengths must already be validated.
    pub(crate) fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.codomain_dim());
        debug_assert_eq!(out.len(), self.domain_dim());
        match &self.node.kind {
            Kind::Identity | Kind::Scaled(_) | Kind::Diagonal(_) => self.apply_into(y, out),
            Kind::Dense(a) => {
                let cols = self.domain_dim();
                out.iter_mut().for_each(|o| *o = 0.0);
                for (yi, row) in y.iter().zip(a.chunks_exact(cols.max(1))) {
                    for (o, aij) in out.iter_mut().zip(row) {
                        *o += aij * yi;
                    }
                }
            }
            Kind::Conv {
                width,
                height,
                size,
                taps,
            } => periodic_filter(y, out, *width, *height, *size, taps, true),
            Kind::Diff {
                width,
                height,
                axis,
            } => diff_adjoint(y, out, *width, *height, *axis),
            Kind::Stack(children) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut tmp = vec![0.0; self.domain_dim()];
                let mut offset = 0;
                for child in children {
                    let len = child.codomain_dim();
                    child.adjoint_into(&y[offset..offset + len], &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += t;
                    }
                    offset += len;
                }
            }
            Kind::Compose { outer, inner } => {
                let mut tmp = vec![0.0; outer.domain_dim()];
                outer.adjoint_into(y, &mut tmp);
                inner.adjoint_into(&tmp, out);
            }
            Kind::Adjoint(original) => original.apply_into(y, out),
        }
    }

    /// Diagonal of the map when it is a product of diagonal-type factors.
    fn as_diagonal(&self) -> Option<Vec<f64>> {
        match &self.node.kind {
            Kind::Identity => Some(vec![1.0; self.domain_dim()]),
            Kind::Scaled(s) => Some(vec![*s; self.domain_dim()]),
            Kind::Diagonal(d) => Some(d.clone()),
            Kind::Adjoint(original) => original.as_diagonal(),
            Kind::Compose { outer, inner } => {
                let mut d = outer.as_diagonal()?;
                for (a, b) in d.iter_mut().zip(inner.as_diagonal()?) {
                    *a *= b;
                }
                Some(d)
            }
            _ => None,
        }
    }

    /// Dense row-major materialization (`codomain_dim x domain_dim`).
    pub fn materialize(&self) -> Vec<f64> {
        let (rows, cols) = (self.codomain_dim(), self.domain_dim());
        let mut dense = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for i in 0..rows {
                dense[i * cols + j] = col[i];
            }
            e[j] = 0.0;
        }
        dense
    }

    /// Largest singular value by power iteration on `L* L`, inflated by the
    /// safety factor `1 + tol`.
    pub fn estimate_norm(&self, tol: f64, max_iter: usize, seed: u64) -> Result<NormEstimate> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "norm tolerance must be positive, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument(
                "norm estimation needs max_iter >= 1".into(),
            ));
        }
        let est = self.top_eigen_of_gram(tol, max_iter, seed);
        Ok(NormEstimate {
            value: est.eigenvalue.sqrt() * (1.0 + tol),
            is_upper_bound: est.converged,
            iterations_used: est.iterations,
            residual: est.residual,
        })
    }

    /// Cached estimate with [`NormOptions::default`].
    pub fn norm_estimate(&self) -> NormEstimate {
        *self.node.norm_cache.get_or_init(|| {
            let o = NormOptions::default();
            self.estimate_norm(o.tol, o.max_iter, o.seed)
                .expect("default norm options are valid")
        })
    }

    /// Power iteration for the largest eigenvalue of `L* L` (no safety factor).
    pub(crate) fn top_eigen_of_gram(&self, tol: f64, max_iter: usize, seed: u64) -> GramEigen {
        if let Some(d) = self.as_diagonal() {
            let top = d.iter().fold(0.0_f64, |m, v| m.max(v * v));
            return GramEigen {
                eigenvalue: top,
                converged: true,
                iterations: 0,
                residual: 0.0,
            };
        }
        let n = self.domain_dim();
        let mut v = CounterRng::new(seed, 0).gauss_vec(n);
        let nv = norm(&v);
        if nv == 0.0 {
            return GramEigen {
                eigenvalue: 0.0,
                converged: true,
                iterations: 0,
                residual: 0.0,
            };
        }
        v.iter_mut().for_each(|x| *x /= nv);

        let mut lv = vec![0.0; self.codomain_dim()];
        let mut w = vec![0.0; n];
        let mut sigma_prev = 0.0;
        let mut residual = f64::INFINITY;
        let mut eigenvalue = 0.0;
        for k in 1..=max_iter {
            self.apply_into(&v, &mut lv);
            self.adjoint_into(&lv, &mut w);
            let nw = norm(&w);
            if nw == 0.0 {
                // v lies in the kernel; with a Gaussian start this means L = 0.
                return GramEigen {
                    eigenvalue: 0.0,
                    converged: true,
                    iterations: k,
                    residual: 0.0,
                };
            }
            eigenvalue = nw;
            let sigma = nw.sqrt();
            residual = (sigma - sigma_prev).abs() / sigma;
            sigma_prev = sigma;
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            if residual <= tol {
                return GramEigen {
                    eigenvalue,
                    converged: true,
                    iterations: k,
                    residual,
                };
            }
        }
        GramEigen {
            eigenvalue,
            converged: false,
            iterations: max_iter,
            residual,
        }
    }

    /// Max over seeded Gaussian trials of `|<Lx,y> - <x,L*y>| / (1 + |Lx||y|)`.
    pub fn adjoint_check(&self, trials: usize, seed: u64) -> Result<f64> {
        if trials == 0 {
            return Err(Error::InvalidArgument(
                "adjoint_check needs at least one trial".into(),
            ));
        }
        let mut worst = 0.0_f64;
        for t in 0..trials as u64 {
            let x = CounterRng::new(seed, 2 * t).gauss_vec(self.domain_dim());
            let y = CounterRng::new(seed, 2 * t + 1).gauss_vec(self.codomain_dim());
            let lx = self.apply(&x)?;
            let lty = self.adjoint_apply(&y)?;
            let gap = (dot(&lx, &y) - dot(&x, &lty)).abs() / (1.0 + norm(&lx) * norm(&y));
            worst = worst.max(gap);
        }
        Ok(worst)
    }
}

pub(crate) struct GramEigen {
    pub eigenvalue: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Periodic filtering. Forward mode is convolution,
/// `out[r,c] = Σ k[i,j] x[r + h - i, c + h - j]`; adjoint mode is the matching
/// correlation, `out[r,c] = Σ k[i,j] x[r + i - h, c + j - h]` (indices mod size).
fn periodic_filter(
    x: &[f64],
    out: &mut [f64],
    width: usize,
    height: usize,
    size: usize,
    taps: &[f64],
    adjoint: bool,
) {
    out.iter_mut().for_each(|o| *o = 0.0);
    if width == 0 || height == 0 {
        return;
    }
    let half = (size / 2) as isize;
    for i in 0..size {
        let di = if adjoint {
            i as isize - half
        } else {
            half - i as isize
        };
        let row_shift = di.rem_euclid(height as isize) as usize;
        for j in 0..size {
            let k = taps[i * size + j];
            if k == 0.0 {
                continue;
            }
            let dj = if adjoint {
                j as isize - half
            } else {
                half - j as isize
            };
            let col_shift = dj.rem_euclid(width as isize) as usize;
            let split = width - col_shift;
            for r in 0..height {
                let src_row = &x[((r + row_shift) % height) * width..][..width];
                let dst = &mut out[r * width..][..width];
                for (o, s) in dst[..split].iter_mut().zip(&src_row[col_shift..]) {
                    *o += k * s;
                }
                for (o, s) in dst[split..].iter_mut().zip(&src_row[..col_shift]) {
                    *o += k * s;
                }
            }
        }
    }
}

fn diff_forward(x: &[f64], out: &mut [f64], width: usize, height: usize, axis: Axis) {
    match axis {
        Axis::Horizontal => {
            for r in 0..height {
                let row = &x[r * width..][..width];
                let dst = &mut out[r * width..][..width];
                for c in 0..width.saturating_sub(1) {
                    dst[c] = row[c + 1] - row[c];
                }
                if width > 0 {
                    dst[width - 1] = 0.0;
                }
            }
        }
        Axis::Vertical => {
            for r in 0..height {
                for c in 0..width {
                    let idx = r * width + c;
                    out[idx] = if r + 1 < height {
                        x[idx + width] - x[idx]
                    } else {
                        0.0
                    };
                }
            }
        }
    }
}

fn diff_adjoint(y: &[f64], out: &mut [f64], width: usize, height: usize, axis: Axis) {
    match axis {
        Axis::Horizontal => {
            for r in 0..height {
                let row = &y[r * width..][..width];
                let dst = &mut out[r * width..][..width];
                for c in 0..width {
                    let incoming = if c >= 1 { row[c - 1] } else { 0.0 };
                    let outgoing = if c + 1 < width { row[c] } else { 0.0 };
                    dst[c] = incoming - outgoing;
                }
            }
        }
        Axis::Vertical => {
            for r in 0..height {
                for c in 0..width {
                    let idx = r * width + c;
                    let incoming = if r >= 1 { y[idx - width] } else { 0.0 };
                    let outgoing = if r + 1 < height { y[idx] } else { 0.0 };
                    out[idx] = incoming - outgoing;
                }
            }
        }
    }
}
