//! Bayesian structure learning: posterior over labeled DAGs with a
//! g-prior Gaussian marginal likelihood per node and a uniform DAG prior.

use nalgebra::{DMatrix, DVector};

use crate::dag::DagAdjacency;
use crate::exact::SupportSpec;
use crate::state::StateKey;

use super::bvs::gprior_quadratic;
use super::{check_encoding_len, TargetError, TargetModel};

/// The observational dataset (rows × nodes, standardized columns) plus the
/// node-score hyperparameters.
#[derive(Debug, Clone)]
pub struct BslModel {
    data: DMatrix<f64>,
    g: f64,
    a: f64,
    b: f64,
    responses: Vec<DVector<f64>>,
}

impl BslModel {
    pub fn new(data: DMatrix<f64>, g: f64, a: f64, b: f64) -> Result<Self, TargetError> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(TargetError::InvalidParams("empty dataset".into()));
        }
        if !(g > 0.0) || !(a > 0.0) || !(b > 0.0) {
            return Err(TargetError::InvalidParams(format!(
                "hyperparameters must be positive: g={g}, a={a}, b={b}"
            )));
        }
        for j in 0..data.ncols() {
            let mean = data.column(j).mean();
            if mean.abs() > 1e-8 {
                return Err(TargetError::InvalidParams(format!(
                    "data column {j} has mean {mean}, expected 0 within 1e-8"
                )));
            }
        }
        let responses = (0..data.ncols())
            .map(|j| DVector::from_column_slice(data.column(j).as_slice()))
            .collect();
        Ok(Self { data, g, a, b, responses })
    }

    pub fn node_count(&self) -> usize {
        self.data.ncols()
    }

    /// Marginal log-likelihood of one node's column regressed on its
    /// parent columns (constant terms dropped).
    pub fn node_log_score(&self, node: usize, parents: &[usize]) -> Result<f64, TargetError> {
        let rows = self.data.nrows() as f64;
        let k = parents.len() as f64;
        let quad = gprior_quadratic(&self.data, &self.responses[node], parents, self.g)?;
        Ok(-0.5 * k * (self.g + 1.0).ln()
            - (self.a + 0.5 * rows) * ((quad + 2.0 * self.b) / 2.0).ln())
    }

    /// log p(G) + Σ_i node score, with a uniform prior over DAGs
    /// (log p(G) = 0 up to a constant).
    pub fn log_score_dag(&self, dag: &DagAdjacency) -> Result<f64, TargetError> {
        let mut total = 0.0;
        for node in 0..self.node_count() {
            total += self.node_log_score(node, &dag.parents(node))?;
        }
        Ok(total)
    }
}

impl TargetModel for BslModel {
    fn support(&self) -> SupportSpec {
        SupportSpec::DagSpace { nodes: self.node_count() }
    }

    fn log_score(&self, state: &StateKey) -> Result<f64, TargetError> {
        let n = self.node_count();
        check_encoding_len(state, n * n)?;
        let dag = DagAdjacency::from_state_key(state, n)?;
        self.log_score_dag(&dag)
    }
}
