use crate::error::{check_len, Error, Result};
use crate::linop::LinearMap;

pub const DEFAULT_METRIC_FLOOR: f64 = 1e-8;

/// Positive diagonal preconditioner, bounded below by a floor `α > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    weights: Vec<f64>,
}

impl DiagonalMetric {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_floor(weights, DEFAULT_METRIC_FLOOR)
    }

    pub fn with_floor(weights: Vec<f64>, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "metric floor must be positive, got {floor}"
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "metric must have positive dimension".into(),
            ));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= floor) || !value.is_finite() {
                return Err(Error::MetricBelowFloor {
                    index,
                    value,
                    floor,
                });
            }
        }
        Ok(DiagonalMetric { weights })
    }

    /// `value · Id` on `dim` coordinates.
    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    /// One weight per block, replicated over the block's indices.
    pub fn block_constant(blocks: &BlockStructure, per_block: &[f64]) -> Result<Self> {
        check_len("per-block metric weights", blocks.len(), per_block.len())?;
        let mut weights = vec![0.0; blocks.dim()];
        for (b, &w) in per_block.iter().enumerate() {
            for &i in blocks.group(b) {
                weights[i] = w;
            }
        }
        Self::new(weights)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `U x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("metric apply", self.dim(), x.len())?;
        Ok(self.weights.iter().zip(x).map(|(w, xi)| w * xi).collect())
    }

    pub fn inverse(&self) -> DiagonalMetric {
        DiagonalMetric {
            weights: self.weights.iter().map(|w| 1.0 / w).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<DiagonalMetric> {
        Self::new(self.weights.iter().map(|w| w * factor).collect())
    }

    /// `√U` as a diagonal linear map.
    pub fn sqrt_map(&self) -> LinearMap {
        LinearMap::diagonal(self.weights.iter().map(|w| w.sqrt()).collect())
    }

    pub fn is_block_constant(&self, blocks: &BlockStructure) -> bool {
        blocks.dim() == self.dim() && first_nonconstant_block(&self.weights, blocks).is_none()
    }
}

pub(crate) fn first_nonconstant_block(weights: &[f64], blocks: &BlockStructure) -> Option<usize> {
    (0..blocks.len()).find(|&b| {
        let group = blocks.group(b);
        let first = weights[group[0]];
        group
            .iter()
            .any(|&i| (weights[i] - first).abs() > 1e-12 * first.abs())
    })
}

/// Disjoint groups of indices covering `0..dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    dim: usize,
    indices: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockStructure {
    pub fn new(groups: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut indices = Vec::with_capacity(dim);
        let mut offsets = Vec::with_capacity(groups.len() + 1);
        offsets.push(0);
        for group in &groups {
            if group.is_empty() {
                return Err(Error::InvalidArgument(
                    "empty block in block structure".into(),
                ));
            }
            for &i in group {
                if i >= dim || seen[i] {
                    return Err(Error::InvalidArgument(format!(
                        "block index {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
                indices.push(i);
            }
            offsets.push(indices.len());
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "index {missing} is not covered by any block"
            )));
        }
        Ok(BlockStructure {
            dim,
            indices,
            offsets,
        })
    }

    /// A single block holding every coordinate.
    pub fn single(dim: usize) -> Self {
        BlockStructure {
            dim,
            indices: (0..dim).collect(),
            offsets: vec![0, dim],
        }
    }

    /// Layout of stacked per-pixel fields: coordinate `c * pixels + k` belongs
    /// to block `k` for every component `c`.
    pub fn pixel_components(pixels: usize, components: usize) -> Self {
        let mut indices = Vec::with_capacity(pixels * components);
        let mut offsets = Vec::with_capacity(pixels + 1);
        offsets.push(0);
        for k in 0..pixels {
            for c in 0..components {
                indices.push(c * pixels + k);
            }
            offsets.push(indices.len());
        }
        BlockStructure {
            dim: pixels * components,
            indices,
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, b: usize) -> &[usize] {
        &self.indices[self.offsets[b]..self.offsets[b + 1]]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.len()).map(move |b| self.group(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_is_enforced() {
        assert!(DiagonalMetric::new(vec![1.0, 1e-9]).is_err());
        assert!(DiagonalMetric::new(vec![1.0, f64::NAN]).is_err());
        assert!(DiagonalMetric::new(vec![]).is_err());
        assert!(DiagonalMetric::with_floor(vec![1e-9], 1e-10).is_ok());
        assert!(matches!(
            DiagonalMetric::new(vec![2.0, -1.0]),
            Err(Error::MetricBelowFloor { index: 1, .. })
        ));
    }

    #[test]
    fn block_structures() {
        assert!(BlockStructure::new(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(BlockStructure::new(vec![vec![0]], 2).is_err());
        let b = BlockStructure::pixel_components(3, 2);
        assert_eq!(b.len(), 3);
        assert_eq!(b.group(1), &[1, 4]);
        let same = BlockStructure::new(vec![vec![0, 3], vec![1, 4], vec![2, 5]], 6).unwrap();
        assert_eq!(b, same);
    }

    #[test]
    fn block_constant_metrics() {
        let b = BlockStructure::pixel_components(2, 2);
        let m = DiagonalMetric::block_constant(&b, &[2.0, 3.0]).unwrap();
        assert_eq!(m.weights(), &[2.0, 3.0, 2.0, 3.0]);
        assert!(m.is_block_constant(&b));
        let m = DiagonalMetric::new(vec![2.0, 3.0, 3.0, 3.0]).unwrap();
        assert!(!m.is_block_constant(&b));
    }

    #[test]
    fn inverse_and_sqrt() {
        let m = DiagonalMetric::new(vec![4.0, 0.25]).unwrap();
        assert_eq!(m.inverse().weights(), &[0.25, 4.0]);
        assert_eq!(m.sqrt_map().apply(&[1.0, 1.0]).unwrap(), vec![2.0, 0.5]);
        assert_eq!(m.max_weight(), 4.0);
        assert_eq!(m.min_weight(), 0.25);
    }
}
