//! Target score functions: log π up to an additive constant.

use thiserror::Error;

use crate::dag::GraphError;
use crate::exact::{hypercube_index, SupportSpec};
use crate::state::StateKey;

mod bsl;
mod bvs;
mod ising;

pub use bsl::BslModel;
pub use bvs::{BvsModel, BvsParams};
pub use ising::{IsingModel, IsingParams};

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("state encoding has {actual} bytes, expected {expected}")]
    EncodingLength { expected: usize, actual: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("singular Gram matrix for selected columns {selected:?}")]
    SingularGram { selected: Vec<usize> },
    #[error("invalid target parameters: {0}")]
    InvalidParams(String),
}

/// A discrete target with an evaluable unnormalized log-score.
///
/// `log_score` must be pure: the same state always yields the same value.
pub trait TargetModel: Send + Sync {
    /// The full state space the score is defined on.
    fn support(&self) -> SupportSpec;

    /// log π(x), finite for every state in the support.
    fn log_score(&self, state: &StateKey) -> Result<f64, TargetError>;
}

pub(crate) fn check_encoding_len(state: &StateKey, bits: usize) -> Result<(), TargetError> {
    let expected = StateKey::bytes_for(bits);
    if state.byte_len() != expected {
        return Err(TargetError::EncodingLength {
            expected,
            actual: state.byte_len(),
        });
    }
    Ok(())
}

/// A target given by an explicit score table over `{0,1}^bits`, indexed in
/// lexicographic bit order. Handy for toy chains and tests.
#[derive(Debug, Clone)]
pub struct TableTarget {
    bits: usize,
    log_scores: Vec<f64>,
}

impl TableTarget {
    pub fn new(bits: usize, log_scores: Vec<f64>) -> Result<Self, TargetError> {
        if log_scores.len() != 1usize << bits {
            return Err(TargetError::InvalidParams(format!(
                "table has {} entries, expected 2^{bits}",
                log_scores.len()
            )));
        }
        if let Some(bad) = log_scores.iter().find(|s| !s.is_finite()) {
            return Err(TargetError::InvalidParams(format!(
                "non-finite table score {bad}"
            )));
        }
        Ok(Self { bits, log_scores })
    }
}

impl TargetModel for TableTarget {
    fn support(&self) -> SupportSpec {
        SupportSpec::Hypercube { bits: self.bits }
    }

    fn log_score(&self, state: &StateKey) -> Result<f64, TargetError> {
        check_encoding_len(state, self.bits)?;
        Ok(self.log_scores[hypercube_index(self.bits, state)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_target_scores_by_lexicographic_rank() {
        let target = TableTarget::new(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        // lexicographic order over (x1, x2): 00, 01, 10, 11
        let s = |b: &[bool]| StateKey::from_bits(b);
        assert_eq!(target.log_score(&s(&[false, false])).unwrap(), 0.0);
        assert_eq!(target.log_score(&s(&[false, true])).unwrap(), 1.0);
        assert_eq!(target.log_score(&s(&[true, false])).unwrap(), 2.0);
        assert_eq!(target.log_score(&s(&[true, true])).unwrap(), 3.0);
    }

    #[test]
    fn table_target_validates_inputs() {
        assert!(TableTarget::new(2, vec![0.0; 3]).is_err());
        assert!(TableTarget::new(1, vec![0.0, f64::NAN]).is_err());
    }
}
