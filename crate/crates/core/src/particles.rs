//! Particle sets, weighting schemes, and exact KL divergence.
//!
//! A particle set is a collection of distinct states together with their
//! cached unnormalized log-scores. Given such a set, the weighting that
//! minimizes KL divergence from the target assigns each particle a weight
//! proportional to its score; the attained minimum is the negative log of
//! the target mass carried by the set. Both facts are exposed here
//! (`opad_weights`, `kl_lower_bound`) along with the chain-frequency
//! weighting they are compared against.

use indexmap::IndexMap;
use thiserror::Error;

use crate::math::{logaddexp, logsumexp};
use crate::state::StateKey;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("empty particle set")]
    EmptyParticleSet,
    #[error("empty chain")]
    EmptyChain,
    #[error("non-finite log-score {score} for state {state:?}")]
    NonFiniteScore { state: StateKey, score: f64 },
    #[error("state {state:?} is not in the exact target support")]
    SupportMismatch { state: StateKey },
    #[error("state {state:?} has no cached score")]
    MissingScore { state: StateKey },
    #[error("length mismatch: {values} values vs {probs} probabilities")]
    LengthMismatch { values: usize, probs: usize },
    #[error("not a probability vector: {reason}")]
    InvalidDistribution { reason: String },
}

/// Distinct states with cached unnormalized log-scores, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct ParticleSet {
    entries: IndexMap<StateKey, f64>,
}

impl ParticleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a state with its log-score. Returns `true` if the state was
    /// new. Re-inserting an existing state is a no-op (set semantics).
    pub fn insert(&mut self, state: StateKey, log_score: f64) -> Result<bool, WeightError> {
        if !log_score.is_finite() {
            return Err(WeightError::NonFiniteScore { state, score: log_score });
        }
        match self.entries.entry(state) {
            indexmap::map::Entry::Occupied(_) => Ok(false),
            indexmap::map::Entry::Vacant(slot) => {
                slot.insert(log_score);
                Ok(true)
            }
        }
    }

    pub fn from_scores<I>(scores: I) -> Result<Self, WeightError>
    where
        I: IntoIterator<Item = (StateKey, f64)>,
    {
        let mut set = Self::new();
        for (state, score) in scores {
            set.insert(state, score)?;
        }
        Ok(set)
    }

    pub fn log_score(&self, state: &StateKey) -> Option<f64> {
        self.entries.get(state).copied()
    }

    pub fn contains(&self, state: &StateKey) -> bool {
        self.entries.contains_key(state)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> {
        self.entries.iter().map(|(k, &v)| (k, v))
    }

    pub fn states(&self) -> impl Iterator<Item = &StateKey> {
        self.entries.keys()
    }

    /// log Σ π(x) over the set.
    pub fn log_mass(&self) -> f64 {
        let scores: Vec<f64> = self.entries.values().copied().collect();
        logsumexp(&scores)
    }
}

/// A particle set plus one normalized weight per particle: a distribution
/// supported on the set.
#[derive(Debug, Clone)]
pub struct WeightedApprox {
    particles: ParticleSet,
    log_weights: Vec<f64>,
}

impl WeightedApprox {
    /// Builds from explicit probabilities, which must be strictly positive
    /// and sum to 1 within 1e-12.
    pub fn from_probs(particles: ParticleSet, probs: &[f64]) -> Result<Self, WeightError> {
        if probs.len() != particles.len() {
            return Err(WeightError::LengthMismatch {
                values: particles.len(),
                probs: probs.len(),
            });
        }
        if particles.is_empty() {
            return Err(WeightError::EmptyParticleSet);
        }
        if let Some(&p) = probs.iter().find(|p| !(**p > 0.0)) {
            return Err(WeightError::InvalidDistribution {
                reason: format!("weight {p} is not strictly positive"),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(WeightError::InvalidDistribution {
                reason: format!("weights sum to {total}, not 1"),
            });
        }
        let log_weights = probs.iter().map(|p| p.ln()).collect();
        Ok(Self { particles, log_weights })
    }

    fn from_log_weights(particles: ParticleSet, log_weights: Vec<f64>) -> Self {
        debug_assert_eq!(particles.len(), log_weights.len());
        debug_assert!(
            (log_weights.iter().map(|w| w.exp()).sum::<f64>() - 1.0).abs() <= 1e-12
        );
        Self { particles, log_weights }
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// Iterates `(state, log-score, log-weight)` in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64, f64)> {
        self.particles
            .iter()
            .zip(&self.log_weights)
            .map(|((k, s), &w)| (k, s, w))
    }

    pub fn weight(&self, state: &StateKey) -> Option<f64> {
        let idx = self.particles.entries.get_index_of(state)?;
        Some(self.log_weights[idx].exp())
    }
}

/// Fully enumerated target: log π over the whole support plus log Z.
#[derive(Debug, Clone)]
pub struct ExactTarget {
    table: IndexMap<StateKey, f64>,
    log_z: f64,
}

impl ExactTarget {
    /// Builds from the full-support score table; `log_z` is the log-sum-exp
    /// of all scores.
    pub fn from_scores<I>(scores: I) -> Result<Self, WeightError>
    where
        I: IntoIterator<Item = (StateKey, f64)>,
    {
        let mut table = IndexMap::new();
        for (state, score) in scores {
            if !score.is_finite() {
                return Err(WeightError::NonFiniteScore { state, score });
            }
            table.insert(state, score);
        }
        if table.is_empty() {
            return Err(WeightError::EmptyParticleSet);
        }
        let values: Vec<f64> = table.values().copied().collect();
        let log_z = logsumexp(&values);
        Ok(Self { table, log_z })
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, state: &StateKey) -> bool {
        self.table.contains_key(state)
    }

    /// Unnormalized log π(x), if x is in the support.
    pub fn log_score(&self, state: &StateKey) -> Option<f64> {
        self.table.get(state).copied()
    }

    /// Normalized log π*(x) = log π(x) − log Z.
    pub fn log_prob(&self, state: &StateKey) -> Option<f64> {
        self.table.get(state).map(|s| s - self.log_z)
    }

    pub fn state_at(&self, index: usize) -> Option<&StateKey> {
        self.table.get_index(index).map(|(k, _)| k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, f64)> {
        self.table.iter().map(|(k, &v)| (k, v))
    }
}

/// Weights each particle proportionally to its target score: the unique
/// KL-minimizing weighting on the set's support.
pub fn opad_weights(particles: &ParticleSet) -> Result<WeightedApprox, WeightError> {
    if particles.is_empty() {
        return Err(WeightError::EmptyParticleSet);
    }
    let log_mass = particles.log_mass();
    let log_weights = particles.iter().map(|(_, s)| s - log_mass).collect();
    Ok(WeightedApprox::from_log_weights(particles.clone(), log_weights))
}

/// Weights each distinct chain state by its occurrence frequency.
///
/// `scores` must carry a cached log-score for every accepted state; the
/// resulting support is the distinct states in first-visit order.
pub fn frequency_weights(
    accepted: &[StateKey],
    scores: &ParticleSet,
) -> Result<WeightedApprox, WeightError> {
    if accepted.is_empty() {
        return Err(WeightError::EmptyChain);
    }
    let mut counts: IndexMap<&StateKey, usize> = IndexMap::new();
    for state in accepted {
        *counts.entry(state).or_insert(0) += 1;
    }
    let n = accepted.len() as f64;
    let mut particles = ParticleSet::new();
    let mut log_weights = Vec::with_capacity(counts.len());
    for (state, count) in counts {
        let score = scores
            .log_score(state)
            .ok_or_else(|| WeightError::MissingScore { state: state.clone() })?;
        particles.insert(state.clone(), score)?;
        log_weights.push((count as f64 / n).ln());
    }
    Ok(WeightedApprox::from_log_weights(particles, log_weights))
}

/// KL(P ‖ π*) = Σ_x P(x) (log P(x) − log π*(x)), in the log domain.
///
/// Every particle of `approx` must be in the exact support.
pub fn kl_divergence(approx: &WeightedApprox, exact: &ExactTarget) -> Result<f64, WeightError> {
    let mut kl = 0.0;
    for (state, _, log_w) in approx.iter() {
        let log_p_star = exact
            .log_prob(state)
            .ok_or_else(|| WeightError::SupportMismatch { state: state.clone() })?;
        kl += log_w.exp() * (log_w - log_p_star);
    }
    Ok(kl)
}

/// −log π*(X^P): the minimum KL divergence attainable on the set's support,
/// reached exactly by `opad_weights`.
pub fn kl_lower_bound(particles: &ParticleSet, exact: &ExactTarget) -> Result<f64, WeightError> {
    if particles.is_empty() {
        return Err(WeightError::EmptyParticleSet);
    }
    let mut log_mass = f64::NEG_INFINITY;
    for state in particles.states() {
        let log_score = exact
            .log_score(state)
            .ok_or_else(|| WeightError::SupportMismatch { state: state.clone() })?;
        log_mass = logaddexp(log_mass, log_score);
    }
    Ok(exact.log_z() - log_mass)
}

/// Evaluates both sides of the strict-convexity Jensen inequality:
/// `lhs = Σ f(g_i) p_i`, `rhs = f(Σ g_i p_i)`. For strictly convex `f`,
/// lhs ≥ rhs with equality iff all `g_i` coincide.
pub fn jensen_gap<F>(g_values: &[f64], probs: &[f64], f: F) -> Result<(f64, f64), WeightError>
where
    F: Fn(f64) -> f64,
{
    if g_values.len() != probs.len() {
        return Err(WeightError::LengthMismatch {
            values: g_values.len(),
            probs: probs.len(),
        });
    }
    if g_values.is_empty() {
        return Err(WeightError::InvalidDistribution {
            reason: "empty distribution".into(),
        });
    }
    if let Some(&p) = probs.iter().find(|p| !(**p > 0.0)) {
        return Err(WeightError::InvalidDistribution {
            reason: format!("probability {p} is not strictly positive"),
        });
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(WeightError::InvalidDistribution {
            reason: format!("probabilities sum to {total}, not 1"),
        });
    }
    let lhs: f64 = g_values.iter().zip(probs).map(|(&g, &p)| f(g) * p).sum();
    let mean: f64 = g_values.iter().zip(probs).map(|(&g, &p)| g * p).sum();
    Ok((lhs, f(mean)))
}
