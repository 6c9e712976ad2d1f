//! Metropolis–Hastings engine with proposal bookkeeping.
//!
//! A chain of N states performs N−1 MH steps. Besides the accepted
//! sequence, the trace keeps every state whose score was ever evaluated
//! (initial state and all proposals, accepted or not) with its cached
//! log-score. Those cached values are exactly what the reweighting schemes
//! need, so extracting the frequency, score-on-accepted and
//! score-on-all-proposals approximations costs nothing extra.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dag::DagAdjacency;
use crate::particles::{
    frequency_weights, opad_weights, ParticleSet, WeightError, WeightedApprox,
};
use crate::state::StateKey;
use crate::targets::{TargetError, TargetModel};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("chain needs at least one state")]
    ZeroIterations,
    #[error("non-finite log-score {score} at state {state:?}")]
    NonFiniteScore { state: StateKey, score: f64 },
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// One proposal draw with its forward and backward log-densities.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub state: StateKey,
    pub log_q_forward: f64,
    pub log_q_backward: f64,
}

/// Draws a proposal from the current state. Proposed states must stay in
/// the target support.
pub trait ProposalKernel: Send + Sync {
    fn propose(&self, current: &StateKey, rng: &mut dyn RngCore) -> Proposal;
}

/// Flips one uniformly chosen bit; symmetric, so both log-densities are
/// −log(bits). Serves as the single-site spin flip and the indicator flip.
#[derive(Debug, Clone)]
pub struct BitFlipKernel {
    bits: usize,
}

impl BitFlipKernel {
    pub fn new(bits: usize) -> Self {
        assert!(bits >= 1, "need at least one bit to flip");
        Self { bits }
    }
}

/// Single-site spin flip for an m-site Ising chain.
pub fn ising_flip_kernel(m: usize) -> BitFlipKernel {
    BitFlipKernel::new(m)
}

/// Single-element flip for an m-dimensional selection indicator.
pub fn gamma_flip_kernel(m: usize) -> BitFlipKernel {
    BitFlipKernel::new(m)
}

impl ProposalKernel for BitFlipKernel {
    fn propose(&self, current: &StateKey, rng: &mut dyn RngCore) -> Proposal {
        let site = rng.random_range(0..self.bits);
        let log_q = -(self.bits as f64).ln();
        Proposal {
            state: current.flip_bit(site),
            log_q_forward: log_q,
            log_q_backward: log_q,
        }
    }
}

/// Uniform draw from the single-edge move neighborhood of the current DAG
/// (additions and reversals that keep acyclicity, plus all deletions). The
/// backward density comes from the proposed DAG's own neighborhood size.
#[derive(Debug, Clone)]
pub struct StructureKernel {
    nodes: usize,
}

impl StructureKernel {
    pub fn new(nodes: usize) -> Self {
        assert!(nodes >= 2, "need at least two nodes for edge moves");
        Self { nodes }
    }
}

pub fn structure_kernel(nodes: usize) -> StructureKernel {
    StructureKernel::new(nodes)
}

impl ProposalKernel for StructureKernel {
    fn propose(&self, current: &StateKey, rng: &mut dyn RngCore) -> Proposal {
        let dag = DagAdjacency::from_state_key(current, self.nodes)
            .expect("current chain state must be a valid DAG encoding");
        let neighborhood = dag.neighborhood();
        assert!(!neighborhood.is_empty(), "edge-move neighborhood is never empty for n >= 2");
        let pick = rng.random_range(0..neighborhood.len());
        let proposed = &neighborhood[pick];
        let backward_size = proposed.neighborhood().len();
        Proposal {
            state: proposed.to_state_key(),
            log_q_forward: -(neighborhood.len() as f64).ln(),
            log_q_backward: -(backward_size as f64).ln(),
        }
    }
}

/// Accepted-state sequence plus the score-cached set of the initial state
/// and every proposal.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    accepted: Vec<StateKey>,
    proposal_sequence: Vec<StateKey>,
    proposals: ParticleSet,
    accept_count: usize,
}

impl ChainTrace {
    /// Accepted states, `accepted[0]` being the initial state.
    pub fn accepted(&self) -> &[StateKey] {
        &self.accepted
    }

    /// The proposal drawn at each of the N−1 steps, in order.
    pub fn proposal_sequence(&self) -> &[StateKey] {
        &self.proposal_sequence
    }

    /// Initial state and every distinct proposal, with cached log-scores.
    pub fn proposals(&self) -> &ParticleSet {
        &self.proposals
    }

    pub fn accept_count(&self) -> usize {
        self.accept_count
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }
}

/// Runs N−1 Metropolis–Hastings steps from `init`, recording every
/// proposal with its log-score (each state scored at most once).
///
/// The RNG stream is fully determined by `seed`: identical inputs produce
/// a bit-identical trace.
pub fn run_chain(
    target: &dyn TargetModel,
    kernel: &dyn ProposalKernel,
    init: StateKey,
    iterations: usize,
    seed: u64,
) -> Result<ChainTrace, SamplerError> {
    if iterations == 0 {
        return Err(SamplerError::ZeroIterations);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init_score = target.log_score(&init)?;
    if !init_score.is_finite() {
        return Err(SamplerError::NonFiniteScore { state: init, score: init_score });
    }

    let mut proposals = ParticleSet::new();
    proposals.insert(init.clone(), init_score)?;
    let mut accepted = Vec::with_capacity(iterations);
    let mut proposal_sequence = Vec::with_capacity(iterations - 1);
    accepted.push(init.clone());

    let mut current = init;
    let mut current_score = init_score;
    let mut accept_count = 0usize;

    for _ in 1..iterations {
        let proposal = kernel.propose(&current, &mut rng);
        let proposal_score = match proposals.log_score(&proposal.state) {
            Some(score) => score,
            None => {
                let score = target.log_score(&proposal.state)?;
                if !score.is_finite() {
                    return Err(SamplerError::NonFiniteScore {
                        state: proposal.state,
                        score,
                    });
                }
                proposals.insert(proposal.state.clone(), score)?;
                score
            }
        };
        proposal_sequence.push(proposal.state.clone());

        let log_ratio = proposal_score + proposal.log_q_backward
            - current_score
            - proposal.log_q_forward;
        let u: f64 = rng.random();
        if u.ln() < log_ratio {
            current = proposal.state;
            current_score = proposal_score;
            accept_count += 1;
        }
        accepted.push(current.clone());
    }

    Ok(ChainTrace { accepted, proposal_sequence, proposals, accept_count })
}

/// The three particle approximations a finished chain supports: chain
/// frequencies, score weights on the distinct accepted states, and score
/// weights on all proposals.
pub fn extract_approximations(
    trace: &ChainTrace,
) -> Result<(WeightedApprox, WeightedApprox, WeightedApprox), SamplerError> {
    let mcmc = frequency_weights(&trace.accepted, &trace.proposals)?;
    let mut accepted_set = ParticleSet::new();
    for state in &trace.accepted {
        if !accepted_set.contains(state) {
            let score = trace.proposals.log_score(state).ok_or_else(|| {
                WeightError::MissingScore { state: state.clone() }
            })?;
            accepted_set.insert(state.clone(), score)?;
        }
    }
    let opad = opad_weights(&accepted_set)?;
    let opad_plus = opad_weights(&trace.proposals)?;
    Ok((mcmc, opad, opad_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{build_exact_target, hypercube_state};
    use crate::particles::{kl_divergence, kl_lower_bound};
    use crate::targets::{IsingModel, IsingParams, TableTarget};

    fn uniform_target(bits: usize) -> TableTarget {
        TableTarget::new(bits, vec![0.0; 1 << bits]).unwrap()
    }

    #[test]
    fn single_iteration_trace_is_just_the_init() {
        let target = uniform_target(3);
        let kernel = BitFlipKernel::new(3);
        let init = hypercube_state(3, 5);
        let trace = run_chain(&target, &kernel, init.clone(), 1, 7).unwrap();
        assert_eq!(trace.accepted(), &[init.clone()]);
        assert_eq!(trace.proposals().len(), 1);
        assert!(trace.proposals().contains(&init));
        assert_eq!(trace.accept_count(), 0);
    }

    #[test]
    fn uniform_target_accepts_every_symmetric_proposal() {
        let model = IsingModel::new(IsingParams::uniform(6, 0.0, 1.0, 1.0, 0.1).unwrap());
        let kernel = ising_flip_kernel(6);
        let trace =
            run_chain(&model, &kernel, hypercube_state(6, 0), 5000, 11).unwrap();
        assert_eq!(trace.accept_count(), 4999);
    }

    #[test]
    fn two_state_chain_converges_to_stationary_frequencies() {
        let target = TableTarget::new(1, vec![2.0f64.ln(), 0.0]).unwrap();
        let kernel = BitFlipKernel::new(1);
        let trace =
            run_chain(&target, &kernel, hypercube_state(1, 0), 100_000, 3).unwrap();
        let (mcmc, _, _) = extract_approximations(&trace).unwrap();
        let w0 = mcmc.weight(&hypercube_state(1, 0)).unwrap();
        assert!((w0 - 2.0 / 3.0).abs() < 0.01, "w0 = {w0}");
    }

    #[test]
    fn bit_flip_changes_exactly_one_position_and_is_symmetric() {
        let kernel = BitFlipKernel::new(9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let current = hypercube_state(9, 0b101010101);
        for _ in 0..200 {
            let p = kernel.propose(&current, &mut rng);
            let diff = (0..9).filter(|&i| p.state.bit(i) != current.bit(i)).count();
            assert_eq!(diff, 1);
            assert_eq!(p.log_q_forward, p.log_q_backward);
            assert!((p.log_q_forward - (-(9f64).ln())).abs() < 1e-15);
        }
    }

    #[test]
    fn bit_flip_site_choice_is_uniform() {
        let m = 8;
        let kernel = BitFlipKernel::new(m);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let current = hypercube_state(m, 0);
        let draws = 10_000usize;
        let mut counts = vec![0usize; m];
        for _ in 0..draws {
            let p = kernel.propose(&current, &mut rng);
            let site = (0..m).find(|&i| p.state.bit(i)).unwrap();
            counts[site] += 1;
        }
        // 3-sigma binomial band around draws/m
        let p = 1.0 / m as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (site, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - draws as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "site {site}: count {c}");
        }
    }

    #[test]
    fn structure_kernel_matches_neighborhood_sizes() {
        let kernel = StructureKernel::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // empty DAG on two nodes: neighborhood {add 0->1, add 1->0}, size 2
        let empty = DagAdjacency::empty(2);
        let p = kernel.propose(&empty.to_state_key(), &mut rng);
        assert!((p.log_q_forward - (-(2f64).ln())).abs() < 1e-15);
        // single-edge DAG: neighborhood {delete, reverse}, size 2, so the
        // Hastings correction cancels
        assert!((p.log_q_backward - (-(2f64).ln())).abs() < 1e-15);
        let proposed = DagAdjacency::from_state_key(&p.state, 2).unwrap();
        assert_eq!(proposed.edge_count(), 1);
    }

    #[test]
    fn structure_kernel_proposals_stay_acyclic_and_balance() {
        let nodes = 4;
        let kernel = StructureKernel::new(nodes);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut current = DagAdjacency::empty(nodes).to_state_key();
        for _ in 0..500 {
            let dag = DagAdjacency::from_state_key(&current, nodes).unwrap();
            let p = kernel.propose(&current, &mut rng);
            let proposed = DagAdjacency::from_state_key(&p.state, nodes).unwrap();
            // q(G'|G) * |neighborhood(G)| = 1, and the backward value must
            // match an independent recomputation at G'
            assert!(
                (p.log_q_forward.exp() * dag.neighborhood().len() as f64 - 1.0).abs()
                    < 1e-12
            );
            let back = -(proposed.neighborhood().len() as f64).ln();
            assert!((p.log_q_backward - back).abs() < 1e-12);
            current = p.state;
        }
    }

    #[test]
    fn point_mass_when_no_steps_taken() {
        let target = uniform_target(2);
        let kernel = BitFlipKernel::new(2);
        let init = hypercube_state(2, 3);
        let trace = run_chain(&target, &kernel, init.clone(), 1, 0).unwrap();
        let (mcmc, opad, opad_plus) = extract_approximations(&trace).unwrap();
        for approx in [&mcmc, &opad, &opad_plus] {
            assert_eq!(approx.len(), 1);
            assert!((approx.weight(&init).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kl_ordering_on_small_ising_chain() {
        let model = IsingModel::new(IsingParams::uniform(4, 0.5, 1.0, 1.0, 0.1).unwrap());
        let exact = build_exact_target(&model).unwrap();
        let kernel = ising_flip_kernel(4);
        for seed in 0..5 {
            let trace =
                run_chain(&model, &kernel, hypercube_state(4, 9), 300, seed).unwrap();
            let (mcmc, opad, opad_plus) = extract_approximations(&trace).unwrap();
            let kl_mcmc = kl_divergence(&mcmc, &exact).unwrap();
            let kl_opad = kl_divergence(&opad, &exact).unwrap();
            let kl_plus = kl_divergence(&opad_plus, &exact).unwrap();
            assert!(kl_mcmc >= kl_opad - 1e-9);
            assert!(kl_opad >= kl_plus - 1e-9);
            // Theorem-1 identity against the carried-mass bound
            let mut accepted_set = ParticleSet::new();
            for s in trace.accepted() {
                let _ = accepted_set
                    .insert(s.clone(), trace.proposals().log_score(s).unwrap());
            }
            let bound_opad = kl_lower_bound(&accepted_set, &exact).unwrap();
            let bound_plus = kl_lower_bound(trace.proposals(), &exact).unwrap();
            assert!((kl_opad - bound_opad).abs() <= 1e-9);
            assert!((kl_plus - bound_plus).abs() <= 1e-9);
        }
    }

    #[test]
    fn cached_scores_re_evaluate_identically() {
        let model = IsingModel::new(IsingParams::uniform(5, 0.5, 1.0, 1.0, 0.1).unwrap());
        let kernel = ising_flip_kernel(5);
        let trace =
            run_chain(&model, &kernel, hypercube_state(5, 17), 500, 21).unwrap();
        for (state, cached) in trace.proposals().iter() {
            let fresh = model.log_score(state).unwrap();
            assert_eq!(cached.to_bits(), fresh.to_bits());
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_traces() {
        let model = IsingModel::new(IsingParams::uniform(6, 0.5, 1.0, 1.0, 0.1).unwrap());
        let kernel = ising_flip_kernel(6);
        let init = hypercube_state(6, 33);
        let t1 = run_chain(&model, &kernel, init.clone(), 400, 77).unwrap();
        let t2 = run_chain(&model, &kernel, init, 400, 77).unwrap();
        assert_eq!(t1.accepted(), t2.accepted());
        assert_eq!(t1.proposal_sequence(), t2.proposal_sequence());
        assert_eq!(t1.accept_count(), t2.accept_count());
    }

    #[test]
    fn accepted_states_are_subset_of_scored_proposals() {
        let model = IsingModel::new(IsingParams::uniform(4, 0.5, 1.0, 1.0, 0.1).unwrap());
        let kernel = ising_flip_kernel(4);
        let trace = run_chain(&model, &kernel, hypercube_state(4, 2), 200, 5).unwrap();
        for state in trace.accepted() {
            assert!(trace.proposals().contains(state));
        }
        assert!(trace.accept_count() < trace.len());
    }
}
