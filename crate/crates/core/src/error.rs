use std::io;

use crate::pdsolve::AdmissibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cannot stack an empty list of operators")]
    EmptyStack,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric weight {value} at index {index} is below the floor {floor}")]
    MetricBelowFloor {
        index: usize,
        value: f64,
        floor: f64,
    },

    #[error(
        "metric is not constant over block {block}; the l1,2 prox needs block-constant weights"
    )]
    MetricNotBlockConstant { block: usize },

    #[error("parameters are not admissible:\n{0}")]
    Inadmissible(Box<AdmissibilityReport>),

    #[error("structural restriction violated: {0}")]
    Structural(String),

    #[error("non-finite value in iterates at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
