//! Full-support enumeration and exact target construction.
//!
//! Exact KL evaluation needs log π tabulated over the whole state space, so
//! everything here is guarded to desk scale: hypercubes up to 2^24 states
//! and DAG spaces up to 5 nodes.

use thiserror::Error;

use crate::dag::DagAdjacency;
use crate::particles::ExactTarget;
use crate::state::StateKey;
use crate::targets::{TargetError, TargetModel};

pub const MAX_HYPERCUBE_BITS: usize = 24;
pub const MAX_DAG_NODES: usize = 5;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("hypercube dimension {bits} exceeds the enumeration bound {MAX_HYPERCUBE_BITS}")]
    HypercubeTooLarge { bits: usize },
    #[error("DAG space on {nodes} nodes exceeds the enumeration bound {MAX_DAG_NODES}")]
    DagSpaceTooLarge { nodes: usize },
    #[error("non-finite score {score} at state {state:?}")]
    NonFiniteScore { state: StateKey, score: f64 },
    #[error("enumerated {actual} states, declared cardinality {declared}")]
    CardinalityMismatch { declared: u64, actual: u64 },
    #[error(transparent)]
    Target(#[from] TargetError),
}

/// The state-space family a target is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSpec {
    Hypercube { bits: usize },
    DagSpace { nodes: usize },
}

impl SupportSpec {
    pub fn cardinality(&self) -> u64 {
        match *self {
            SupportSpec::Hypercube { bits } => 1u64 << bits,
            SupportSpec::DagSpace { nodes } => labeled_dag_count(nodes),
        }
    }

    /// Number of bits in the canonical state encoding.
    pub fn encoding_bits(&self) -> usize {
        match *self {
            SupportSpec::Hypercube { bits } => bits,
            SupportSpec::DagSpace { nodes } => nodes * nodes,
        }
    }
}

/// Number of labeled DAGs on `nodes` nodes (Robinson's recurrence).
pub fn labeled_dag_count(nodes: usize) -> u64 {
    // a(n) = sum_{k=1..n} (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k), a(0) = 1
    let mut counts = vec![1i128];
    for n in 1..=nodes {
        let mut total: i128 = 0;
        let mut binom: i128 = 1;
        for k in 1..=n {
            binom = binom * (n - k + 1) as i128 / k as i128;
            let term = binom * (1i128 << (k * (n - k))) * counts[n - k];
            if k % 2 == 1 {
                total += term;
            } else {
                total -= term;
            }
        }
        counts.push(total);
    }
    counts[nodes] as u64
}

/// State at lexicographic rank `index` in `{0,1}^bits`.
pub fn hypercube_state(bits: usize, index: usize) -> StateKey {
    let bools: Vec<bool> = (0..bits).map(|j| index >> (bits - 1 - j) & 1 == 1).collect();
    StateKey::from_bits(&bools)
}

/// Lexicographic rank of a hypercube state; inverse of [`hypercube_state`].
pub fn hypercube_index(bits: usize, state: &StateKey) -> usize {
    (0..bits).fold(0, |acc, j| acc << 1 | state.bit(j) as usize)
}

/// All 2^bits states in lexicographic bit order.
pub fn enumerate_hypercube(
    bits: usize,
) -> Result<impl Iterator<Item = StateKey>, ExactError> {
    if bits > MAX_HYPERCUBE_BITS {
        return Err(ExactError::HypercubeTooLarge { bits });
    }
    Ok((0..1usize << bits).map(move |i| hypercube_state(bits, i)))
}

/// Every labeled DAG on `nodes` nodes, exactly once: all directed graphs
/// without self-loops, filtered for acyclicity, in lexicographic order of
/// the off-diagonal adjacency bits.
pub fn enumerate_dags(nodes: usize) -> Result<impl Iterator<Item = StateKey>, ExactError> {
    if nodes > MAX_DAG_NODES {
        return Err(ExactError::DagSpaceTooLarge { nodes });
    }
    let off_diag: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|i| (0..nodes).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .collect();
    let slots = off_diag.len();
    Ok((0..1u64 << slots).filter_map(move |mask| {
        let mut dag = DagAdjacency::empty(nodes);
        for (bit, &(i, j)) in off_diag.iter().enumerate() {
            if mask >> (slots - 1 - bit) & 1 == 1 {
                dag.set_edge(i, j, true);
            }
        }
        dag.is_acyclic().then(|| dag.to_state_key())
    }))
}

pub fn enumerate_support(
    spec: SupportSpec,
) -> Result<Box<dyn Iterator<Item = StateKey>>, ExactError> {
    match spec {
        SupportSpec::Hypercube { bits } => Ok(Box::new(enumerate_hypercube(bits)?)),
        SupportSpec::DagSpace { nodes } => Ok(Box::new(enumerate_dags(nodes)?)),
    }
}

/// Tabulates log π over the full support and computes log Z.
pub fn build_exact_target(model: &dyn TargetModel) -> Result<ExactTarget, ExactError> {
    let spec = model.support();
    let mut scores = Vec::new();
    for state in enumerate_support(spec)? {
        let score = model.log_score(&state)?;
        if !score.is_finite() {
            return Err(ExactError::NonFiniteScore { state, score });
        }
        scores.push((state, score));
    }
    let actual = scores.len() as u64;
    let declared = spec.cardinality();
    if actual != declared {
        return Err(ExactError::CardinalityMismatch { declared, actual });
    }
    Ok(ExactTarget::from_scores(scores).expect("scores checked finite"))
}
