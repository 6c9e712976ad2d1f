//! 1D periodic Ising model on a closed loop.

use crate::exact::SupportSpec;
use crate::state::StateKey;

use super::{check_encoding_len, TargetError, TargetModel};

/// Parameters of the 1D periodic Ising model: site count, inverse
/// temperature, magnetic moment, and per-site coupling and field strengths.
#[derive(Debug, Clone)]
pub struct IsingParams {
    pub sites: usize,
    pub beta: f64,
    pub magnetic_moment: f64,
    pub coupling: Vec<f64>,
    pub field: Vec<f64>,
}

impl IsingParams {
    pub fn new(
        sites: usize,
        beta: f64,
        magnetic_moment: f64,
        coupling: Vec<f64>,
        field: Vec<f64>,
    ) -> Result<Self, TargetError> {
        if sites < 2 {
            return Err(TargetError::InvalidParams(format!(
                "need at least 2 sites, got {sites}"
            )));
        }
        if beta < 0.0 || !beta.is_finite() {
            return Err(TargetError::InvalidParams(format!(
                "inverse temperature must be finite and >= 0, got {beta}"
            )));
        }
        if coupling.len() != sites || field.len() != sites {
            return Err(TargetError::InvalidParams(format!(
                "coupling/field lengths ({}, {}) do not match {sites} sites",
                coupling.len(),
                field.len()
            )));
        }
        Ok(Self { sites, beta, magnetic_moment, coupling, field })
    }

    /// Uniform couplings `j` and fields `h` at every site.
    pub fn uniform(
        sites: usize,
        beta: f64,
        magnetic_moment: f64,
        j: f64,
        h: f64,
    ) -> Result<Self, TargetError> {
        Self::new(sites, beta, magnetic_moment, vec![j; sites], vec![h; sites])
    }
}

#[derive(Debug, Clone)]
pub struct IsingModel {
    params: IsingParams,
}

impl IsingModel {
    pub fn new(params: IsingParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &IsingParams {
        &self.params
    }

    /// −β H(x) for an explicit ±1 spin vector, with x_{m+1} = x_1.
    pub fn log_score_spins(&self, spins: &[f64]) -> f64 {
        let p = &self.params;
        let m = p.sites;
        let mut hamiltonian = 0.0;
        for j in 0..m {
            hamiltonian -= p.coupling[j] * spins[j] * spins[(j + 1) % m];
            hamiltonian -= p.magnetic_moment * p.field[j] * spins[j];
        }
        -p.beta * hamiltonian
    }
}

impl TargetModel for IsingModel {
    fn support(&self) -> SupportSpec {
        SupportSpec::Hypercube { bits: self.params.sites }
    }

    fn log_score(&self, state: &StateKey) -> Result<f64, TargetError> {
        check_encoding_len(state, self.params.sites)?;
        let spins: Vec<f64> = state
            .to_bits(self.params.sites)
            .into_iter()
            .map(|b| if b { 1.0 } else { -1.0 })
            .collect();
        Ok(self.log_score_spins(&spins))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_up(m: usize) -> StateKey {
        StateKey::from_bits(&vec![true; m])
    }

    #[test]
    fn zero_temperature_is_uniform() {
        let model = IsingModel::new(IsingParams::uniform(4, 0.0, 1.0, 1.0, 0.1).unwrap());
        for bits in 0u8..16 {
            let state = StateKey::from_bits(&(0..4).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>());
            assert_eq!(model.log_score(&state).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_scores_on_three_sites() {
        // J=1, h=0, mu=1, beta=1, all spins +1: H = -3, score = 3
        let m1 = IsingModel::new(IsingParams::uniform(3, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!((m1.log_score(&all_up(3)).unwrap() - 3.0).abs() < 1e-15);
        // J=1, h=0.1, mu=1, beta=0.5, all spins +1: H = -3.3, score = 1.65
        let m2 = IsingModel::new(IsingParams::uniform(3, 0.5, 1.0, 1.0, 0.1).unwrap());
        assert!((m2.log_score(&all_up(3)).unwrap() - 1.65).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let model = IsingModel::new(IsingParams::uniform(12, 0.5, 1.0, 1.0, 0.1).unwrap());
        let short = StateKey::from_bits(&[true; 3]);
        assert!(matches!(
            model.log_score(&short),
            Err(TargetError::EncodingLength { .. })
        ));
    }

    #[test]
    fn translation_symmetry_with_uniform_parameters() {
        let model = IsingModel::new(IsingParams::uniform(5, 0.7, 1.3, 0.8, 0.2).unwrap());
        let bits = [true, false, false, true, true];
        let base = model.log_score(&StateKey::from_bits(&bits)).unwrap();
        for shift in 1..5 {
            let rotated: Vec<bool> = (0..5).map(|i| bits[(i + shift) % 5]).collect();
            let score = model.log_score(&StateKey::from_bits(&rotated)).unwrap();
            assert!((score - base).abs() < 1e-12, "shift {shift}");
        }
    }

    #[test]
    fn global_flip_symmetry_without_field() {
        let model = IsingModel::new(IsingParams::uniform(6, 0.5, 1.0, 1.0, 0.0).unwrap());
        let bits = [true, false, true, true, false, false];
        let flipped: Vec<bool> = bits.iter().map(|b| !b).collect();
        let a = model.log_score(&StateKey::from_bits(&bits)).unwrap();
        let b = model.log_score(&StateKey::from_bits(&flipped)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(IsingParams::uniform(1, 0.5, 1.0, 1.0, 0.0).is_err());
        assert!(IsingParams::uniform(3, -0.5, 1.0, 1.0, 0.0).is_err());
        assert!(IsingParams::new(3, 0.5, 1.0, vec![1.0; 2], vec![0.0; 3]).is_err());
    }
}
