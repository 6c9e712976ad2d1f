//! Optimal particle reweighting for discrete MCMC.
//!
//! Any set of scored particles admits a unique weighting that minimizes KL
//! divergence from a discrete target: weights proportional to the
//! unnormalized target scores. This crate provides that reweighting for
//! Metropolis–Hastings chains (over the accepted states, or over every
//! proposal the chain ever scored), three target families (1D periodic
//! Ising, spike-and-slab variable selection, DAG structure learning),
//! exact KL evaluation by full support enumeration, and synthetic data
//! generators.

pub mod dag;
pub mod datagen;
pub mod exact;
pub mod math;
pub mod particles;
pub mod samplers;
pub mod state;
pub mod targets;

pub use dag::DagAdjacency;
pub use exact::{build_exact_target, SupportSpec};
pub use particles::{
    frequency_weights, jensen_gap, kl_divergence, kl_lower_bound, opad_weights,
    ExactTarget, ParticleSet, WeightedApprox,
};
pub use samplers::{
    extract_approximations, gamma_flip_kernel, ising_flip_kernel, run_chain,
    structure_kernel, BitFlipKernel, ChainTrace, Proposal, ProposalKernel,
    StructureKernel,
};
pub use state::StateKey;
pub use targets::{BslModel, BvsModel, BvsParams, IsingModel, IsingParams, TableTarget, TargetModel};
