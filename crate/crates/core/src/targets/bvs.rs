//! Bayesian variable selection: spike-and-slab posterior over selection
//! indicator vectors under a Gaussian g-prior.

use nalgebra::{DMatrix, DVector};

use crate::exact::SupportSpec;
use crate::state::StateKey;

use super::{check_encoding_len, TargetError, TargetModel};

/// yᵀ(I − g/(g+1)·X_S (X_Sᵀ X_S)⁻¹ X_Sᵀ) y, via a Cholesky solve of the
/// Gram matrix (pivoted-LU fallback, never an explicit inverse).
pub(crate) fn gprior_quadratic(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    selected: &[usize],
    g: f64,
) -> Result<f64, TargetError> {
    let yty = response.dot(response);
    if selected.is_empty() {
        return Ok(yty);
    }
    let sub = design.select_columns(selected.iter());
    let gram = sub.tr_mul(&sub);
    let xty = sub.tr_mul(response);
    let solution = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&xty),
        None => {
            let lu = gram.full_piv_lu();
            if !lu.is_invertible() {
                return Err(TargetError::SingularGram { selected: selected.to_vec() });
            }
            lu.solve(&xty).ok_or_else(|| TargetError::SingularGram {
                selected: selected.to_vec(),
            })?
        }
    };
    Ok(yty - g / (g + 1.0) * xty.dot(&solution))
}

/// Model inputs: centered design matrix and response, g-prior scale,
/// inverse-gamma hyperparameters on the noise variance, and the Bernoulli
/// prior inclusion probability.
#[derive(Debug, Clone)]
pub struct BvsParams {
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub g: f64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
}

impl BvsParams {
    pub fn new(
        design: DMatrix<f64>,
        response: DVector<f64>,
        g: f64,
        a: f64,
        b: f64,
        rho: f64,
    ) -> Result<Self, TargetError> {
        let n = design.nrows();
        if n == 0 || design.ncols() == 0 {
            return Err(TargetError::InvalidParams("empty design matrix".into()));
        }
        if response.len() != n {
            return Err(TargetError::InvalidParams(format!(
                "response length {} does not match {n} design rows",
                response.len()
            )));
        }
        if !(g > 0.0) || !(a > 0.0) || !(b > 0.0) {
            return Err(TargetError::InvalidParams(format!(
                "hyperparameters must be positive: g={g}, a={a}, b={b}"
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(TargetError::InvalidParams(format!(
                "prior inclusion probability must be in (0,1), got {rho}"
            )));
        }
        // the marginal likelihood assumes zero-mean predictors and response
        for j in 0..design.ncols() {
            let mean = design.column(j).mean();
            if mean.abs() > 1e-8 {
                return Err(TargetError::InvalidParams(format!(
                    "design column {j} has mean {mean}, expected 0 within 1e-8"
                )));
            }
        }
        let ymean = response.mean();
        if ymean.abs() > 1e-8 {
            return Err(TargetError::InvalidParams(format!(
                "response has mean {ymean}, expected 0 within 1e-8"
            )));
        }
        Ok(Self { design, response, g, a, b, rho })
    }
}

#[derive(Debug, Clone)]
pub struct BvsModel {
    params: BvsParams,
}

impl BvsModel {
    pub fn new(params: BvsParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &BvsParams {
        &self.params
    }

    pub fn predictors(&self) -> usize {
        self.params.design.ncols()
    }

    /// Unnormalized log posterior of an indicator vector given as the set
    /// of included column indices.
    pub fn log_score_selected(&self, selected: &[usize]) -> Result<f64, TargetError> {
        let p = &self.params;
        let m = p.design.ncols();
        let n = p.design.nrows() as f64;
        let k = selected.len() as f64;
        let quad = gprior_quadratic(&p.design, &p.response, selected, p.g)?;
        let log_prior = k * p.rho.ln() + (m as f64 - k) * (1.0 - p.rho).ln();
        let log_lik =
            -0.5 * k * (p.g + 1.0).ln() - (p.a + 0.5 * n) * ((quad + 2.0 * p.b) / 2.0).ln();
        Ok(log_prior + log_lik)
    }
}

impl TargetModel for BvsModel {
    fn support(&self) -> SupportSpec {
        SupportSpec::Hypercube { bits: self.predictors() }
    }

    fn log_score(&self, state: &StateKey) -> Result<f64, TargetError> {
        let m = self.predictors();
        check_encoding_len(state, m)?;
        let selected: Vec<usize> = (0..m).filter(|&j| state.bit(j)).collect();
        self.log_score_selected(&selected)
    }
}
