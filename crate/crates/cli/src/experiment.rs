//! Multi-chain experiment runner: seeded chains, KL-vs-iteration traces
//! for the frequency, score-on-accepted and score-on-all-proposals
//! weightings, and CSV persistence.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use opad_core::datagen::{generate_bsl, generate_bvs, load_csv, DataError};
use opad_core::exact::{build_exact_target, ExactError};
use opad_core::math::{logaddexp, split_seed};
use opad_core::samplers::SamplerError;
use opad_core::targets::TargetError;
use opad_core::{
    gamma_flip_kernel, ising_flip_kernel, run_chain, structure_kernel, BslModel,
    BvsModel, BvsParams, ChainTrace, ExactTarget, IsingModel, IsingParams,
    ProposalKernel, StateKey, TargetModel,
};

use crate::config::{checkpoint_schedule, ConfigError, ExperimentConfig, KernelChoice, TargetFamily};

/// Ordering slack for the KL chain assertions.
pub const KL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("chain {chain}, iteration {iteration}: KL ordering violated ({detail})")]
    OrderingViolated {
        chain: usize,
        iteration: usize,
        detail: String,
    },
    #[error("state missing from exact table: {state:?}")]
    SupportMismatch { state: StateKey },
    #[error("empty KL trace")]
    EmptyTrace,
    #[error("malformed trace row {row}: {detail}")]
    MalformedTrace { row: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The three particle weightings whose divergence is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Mcmc,
    Opad,
    OpadPlus,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mcmc, Method::Opad, Method::OpadPlus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mcmc => "mcmc",
            Method::Opad => "opad",
            Method::OpadPlus => "opad+",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mcmc" => Ok(Method::Mcmc),
            "opad" => Ok(Method::Opad),
            "opad+" => Ok(Method::OpadPlus),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlRow {
    pub chain: usize,
    pub iteration: usize,
    pub method: Method,
    pub kl: f64,
}

/// KL divergence per (chain, checkpoint iteration, method).
#[derive(Debug, Clone, Default)]
pub struct KlTrace {
    pub rows: Vec<KlRow>,
}

/// Builds the target model a config describes, generating or loading the
/// dataset where one is needed.
pub fn build_model(config: &ExperimentConfig) -> Result<Box<dyn TargetModel>, ExperimentError> {
    match config.target {
        TargetFamily::Ising => {
            let params = IsingParams::uniform(
                config.ising_sites,
                config.ising_beta,
                config.ising_mu,
                config.ising_coupling,
                config.ising_field,
            )?;
            Ok(Box::new(IsingModel::new(params)))
        }
        TargetFamily::Bvs => {
            let (x, y) = match &config.data_path {
                Some(path) => {
                    let response = config.response.as_deref().unwrap_or("y");
                    let dataset = load_csv(path, Some(response), config.standardize)?;
                    let y = dataset.y.expect("response column requested");
                    (dataset.x, y)
                }
                None => {
                    let (dataset, _) = generate_bvs(
                        config.bvs_predictors,
                        config.bvs_rows,
                        config.bvs_rho,
                        config.data_seed,
                    )?;
                    let y = dataset.y.expect("generator provides a response");
                    (dataset.x, y)
                }
            };
            let g = config.bvs_g.unwrap_or(x.nrows() as f64);
            let params =
                BvsParams::new(x, y, g, config.bvs_a, config.bvs_b, config.bvs_rho)?;
            Ok(Box::new(BvsModel::new(params)))
        }
        TargetFamily::Bsl => {
            let x = match &config.data_path {
                Some(path) => load_csv(path, None, config.standardize)?.x,
                None => {
                    generate_bsl(
                        config.bsl_nodes,
                        config.bsl_degree,
                        config.bsl_rows,
                        config.data_seed,
                    )?
                    .0
                    .x
                }
            };
            let g = x.nrows() as f64;
            Ok(Box::new(BslModel::new(x, g, config.bvs_a, config.bvs_b)?))
        }
    }
}

fn build_kernel(config: &ExperimentConfig) -> Box<dyn ProposalKernel> {
    match (config.target, config.resolved_kernel()) {
        (TargetFamily::Ising, _) => Box::new(ising_flip_kernel(config.ising_sites)),
        (TargetFamily::Bvs, _) => Box::new(gamma_flip_kernel(config.bvs_predictors)),
        (TargetFamily::Bsl, KernelChoice::Structure) => {
            Box::new(structure_kernel(config.bsl_nodes))
        }
        (TargetFamily::Bsl, KernelChoice::Flip) => unreachable!("rejected by validate"),
    }
}

/// Replays one finished chain and emits KL rows at the checkpoints,
/// maintaining running log-masses for the two score weightings and visit
/// counts for the frequency weighting. Enforces, per checkpoint, the
/// ordering KL(mcmc) ≥ KL(opad) ≥ KL(opad+) and the monotone decrease of
/// both score-weighting series.
fn chain_kl_rows(
    chain: usize,
    trace: &ChainTrace,
    exact: &ExactTarget,
    checkpoints: &[usize],
) -> Result<Vec<KlRow>, ExperimentError> {
    let log_z = exact.log_z();
    let lookup = |state: &StateKey| {
        exact
            .log_score(state)
            .ok_or_else(|| ExperimentError::SupportMismatch { state: state.clone() })
    };

    // distinct accepted states with (visit count, log pi)
    let mut visits: IndexMap<StateKey, (usize, f64)> = IndexMap::new();
    let mut accepted_mass = f64::NEG_INFINITY;
    let mut proposal_seen: HashMap<StateKey, ()> = HashMap::new();
    let mut proposal_mass = f64::NEG_INFINITY;

    let mut rows = Vec::with_capacity(checkpoints.len() * 3);
    let mut next_checkpoint = checkpoints.iter().copied().peekable();
    let mut prev_opad = f64::INFINITY;
    let mut prev_plus = f64::INFINITY;

    for t in 1..=trace.len() {
        let state = &trace.accepted()[t - 1];
        match visits.entry(state.clone()) {
            indexmap::map::Entry::Occupied(mut e) => e.get_mut().0 += 1,
            indexmap::map::Entry::Vacant(e) => {
                let score = lookup(state)?;
                accepted_mass = logaddexp(accepted_mass, score);
                e.insert((1, score));
            }
        }
        // the proposal set starts with the initial state and then grows by
        // the proposal drawn at each step, accepted or not
        let proposed = if t == 1 { state } else { &trace.proposal_sequence()[t - 2] };
        if !proposal_seen.contains_key(proposed) {
            proposal_mass = logaddexp(proposal_mass, lookup(proposed)?);
            proposal_seen.insert(proposed.clone(), ());
        }

        if next_checkpoint.peek() != Some(&t) {
            continue;
        }
        next_checkpoint.next();

        let n = t as f64;
        let kl_mcmc: f64 = visits
            .values()
            .map(|&(count, score)| {
                let p = count as f64 / n;
                p * (p.ln() - (score - log_z))
            })
            .sum();
        let kl_opad = log_z - accepted_mass;
        let kl_plus = log_z - proposal_mass;

        for (method, kl) in [
            (Method::Mcmc, kl_mcmc),
            (Method::Opad, kl_opad),
            (Method::OpadPlus, kl_plus),
        ] {
            if kl < -KL_TOLERANCE {
                return Err(ExperimentError::OrderingViolated {
                    chain,
                    iteration: t,
                    detail: format!("negative KL {kl} for {method}"),
                });
            }
            rows.push(KlRow { chain, iteration: t, method, kl });
        }
        if kl_mcmc < kl_opad - KL_TOLERANCE || kl_opad < kl_plus - KL_TOLERANCE {
            return Err(ExperimentError::OrderingViolated {
                chain,
                iteration: t,
                detail: format!("mcmc {kl_mcmc}, opad {kl_opad}, opad+ {kl_plus}"),
            });
        }
        if kl_opad > prev_opad + KL_TOLERANCE || kl_plus > prev_plus + KL_TOLERANCE {
            return Err(ExperimentError::OrderingViolated {
                chain,
                iteration: t,
                detail: format!(
                    "non-monotone series: opad {prev_opad}->{kl_opad}, opad+ {prev_plus}->{kl_plus}"
                ),
            });
        }
        prev_opad = kl_opad;
        prev_plus = kl_plus;
    }
    Ok(rows)
}

/// Runs the configured chains against the exact target and returns the
/// merged KL trace, rows ordered by (chain, iteration, method).
///
/// Chain `c` draws its initial state uniformly from the enumerated support
/// with RNG stream `split_seed(seed, 2c)` and samples with stream
/// `split_seed(seed, 2c+1)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<KlTrace, ExperimentError> {
    config.validate()?;
    let model = build_model(config)?;
    let kernel = build_kernel(config);
    let exact = build_exact_target(model.as_ref())?;
    let checkpoints = checkpoint_schedule(config.iterations, config.stride);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool");
    let results: Vec<Result<Vec<KlRow>, ExperimentError>> = pool.install(|| {
        (0..config.chains)
            .into_par_iter()
            .map(|chain| {
                let mut init_rng =
                    ChaCha8Rng::seed_from_u64(split_seed(config.seed, 2 * chain as u64));
                let init = exact
                    .state_at(init_rng.random_range(0..exact.len()))
                    .expect("non-empty support")
                    .clone();
                let trace = run_chain(
                    model.as_ref(),
                    kernel.as_ref(),
                    init,
                    config.iterations,
                    split_seed(config.seed, 2 * chain as u64 + 1),
                )?;
                chain_kl_rows(chain, &trace, &exact, &checkpoints)
            })
            .collect()
    });

    let mut trace = KlTrace::default();
    let mut first_error = None;
    for result in results {
        match result {
            Ok(rows) => trace.rows.extend(rows),
            Err(e) if first_error.is_none() => first_error = Some(e),
            Err(_) => {}
        }
    }
    trace
        .rows
        .sort_by_key(|r| (r.chain, r.iteration, Method::ALL.iter().position(|m| *m == r.method)));
    match first_error {
        Some(e) => Err(e),
        None => Ok(trace),
    }
}

/// Runs an experiment and persists `kl_trace.csv` and the resolved config
/// `manifest` under the configured output directory. Partial rows are
/// flushed even when a chain fails.
pub fn run_and_persist(config: &ExperimentConfig) -> Result<KlTrace, ExperimentError> {
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(config.out_dir.join("manifest"), config.manifest())?;
    let result = run_experiment(config);
    let trace_path = config.out_dir.join("kl_trace.csv");
    match result {
        Ok(trace) => {
            write_kl_trace(&trace, &trace_path)?;
            Ok(trace)
        }
        Err(e) => {
            let _ = write_kl_trace(&KlTrace::default(), &trace_path);
            Err(e)
        }
    }
}

pub fn write_kl_trace(trace: &KlTrace, path: &Path) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["chain", "iteration", "method", "kl"])?;
    for row in &trace.rows {
        writer.write_record([
            row.chain.to_string(),
            row.iteration.to_string(),
            row.method.to_string(),
            row.kl.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_kl_trace(path: &Path) -> Result<KlTrace, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<&str, ExperimentError> {
            record.get(i).ok_or_else(|| ExperimentError::MalformedTrace {
                row: idx + 2,
                detail: format!("missing field {i}"),
            })
        };
        let parse_err = |detail: String| ExperimentError::MalformedTrace { row: idx + 2, detail };
        rows.push(KlRow {
            chain: field(0)?.parse().map_err(|e| parse_err(format!("chain: {e}")))?,
            iteration: field(1)?
                .parse()
                .map_err(|e| parse_err(format!("iteration: {e}")))?,
            method: field(2)?.parse().map_err(parse_err)?,
            kl: field(3)?.parse().map_err(|e| parse_err(format!("kl: {e}")))?,
        });
    }
    Ok(KlTrace { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use opad_core::extract_approximations;
    use opad_core::particles::kl_divergence;

    fn tiny_ising_config() -> ExperimentConfig {
        ExperimentConfig {
            target: TargetFamily::Ising,
            ising_sites: 4,
            iterations: 250,
            chains: 3,
            stride: 50,
            seed: 5,
            workers: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_iteration_single_chain_has_three_equal_rows() {
        let config = ExperimentConfig {
            chains: 1,
            iterations: 1,
            ising_sites: 3,
            ..tiny_ising_config()
        };
        let trace = run_experiment(&config).unwrap();
        assert_eq!(trace.rows.len(), 3);
        let kl = trace.rows[0].kl;
        assert!(trace.rows.iter().all(|r| (r.kl - kl).abs() < 1e-15));
        assert!(trace.rows.iter().all(|r| r.iteration == 1));
        // all three equal -log pi*(init), which is positive for beta > 0
        assert!(kl > 0.0);
    }

    #[test]
    fn incremental_kl_matches_full_recomputation() {
        let config = tiny_ising_config();
        let model = build_model(&config).unwrap();
        let kernel = build_kernel(&config);
        let exact = build_exact_target(model.as_ref()).unwrap();
        let init = exact.state_at(3).unwrap().clone();
        let trace =
            run_chain(model.as_ref(), kernel.as_ref(), init.clone(), 250, 11).unwrap();
        let checkpoints = checkpoint_schedule(250, 50);
        let rows = chain_kl_rows(0, &trace, &exact, &checkpoints).unwrap();
        // from-scratch recomputation at every checkpoint via prefix re-runs
        // of the weighting operations
        for &t in &checkpoints {
            let prefix = run_chain(model.as_ref(), kernel.as_ref(), init.clone(), t, 11)
                .unwrap();
            let (mcmc, opad, opad_plus) = extract_approximations(&prefix).unwrap();
            let expected = [
                kl_divergence(&mcmc, &exact).unwrap(),
                kl_divergence(&opad, &exact).unwrap(),
                kl_divergence(&opad_plus, &exact).unwrap(),
            ];
            for (method_idx, method) in Method::ALL.iter().enumerate() {
                let row = rows
                    .iter()
                    .find(|r| r.iteration == t && r.method == *method)
                    .unwrap();
                assert!(
                    (row.kl - expected[method_idx]).abs() <= 1e-9,
                    "t={t} {method}: incremental {} vs scratch {}",
                    row.kl,
                    expected[method_idx]
                );
            }
        }
    }

    #[test]
    fn rows_are_ordered_and_satisfy_the_kl_chain() {
        let trace = run_experiment(&tiny_ising_config()).unwrap();
        let checkpoints = checkpoint_schedule(250, 50);
        assert_eq!(trace.rows.len(), 3 * checkpoints.len() * 3);
        for window in trace.rows.chunks(3) {
            assert_eq!(window[0].method, Method::Mcmc);
            assert_eq!(window[1].method, Method::Opad);
            assert_eq!(window[2].method, Method::OpadPlus);
            assert!(window[0].kl >= window[1].kl - KL_TOLERANCE);
            assert!(window[1].kl >= window[2].kl - KL_TOLERANCE);
        }
    }

    #[test]
    fn trace_csv_round_trips() {
        let trace = run_experiment(&ExperimentConfig {
            chains: 2,
            iterations: 60,
            ..tiny_ising_config()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kl_trace.csv");
        write_kl_trace(&trace, &path).unwrap();
        let back = read_kl_trace(&path).unwrap();
        assert_eq!(back.rows, trace.rows);
    }

    #[test]
    fn reruns_are_deterministic() {
        let config = tiny_ising_config();
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
