//! Seeded Monte Carlo replications, the oracle baseline and pseudo-regret
//! summaries.
//!
//! Replications are independent work units: each owns its environment,
//! policy and the two random streams addressed by
//! `(base_seed, domain, replication)` (see [`crate::rng`]). Results are
//! gathered by replication index, so serial and parallel execution produce
//! identical records.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Environment, ModelConfig};
use crate::error::{Error, Result};
use crate::policies::{choose, PolicyDescriptor, PolicyEvents};
use crate::rng::{Domain, ReplicationStreams};
use crate::stats::{self, Quantiles};

/// Upper bound on stored trajectory points per replication.
pub const MAX_TRAJECTORY_POINTS: u64 = 512;

/// Minimum number of oracle runs behind a baseline.
pub const MIN_ORACLE_REPLICATIONS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Rayon's global pool (hardware parallelism).
    #[default]
    Parallel,
    /// A dedicated pool with this many workers.
    ParallelWith(usize),
}

impl Execution {
    /// Parallel execution capped by `BANDIT_THREADS` when set.
    pub fn from_env() -> Self {
        match std::env::var("BANDIT_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(0) | None => Execution::Parallel,
            Some(1) => Execution::Serial,
            Some(n) => Execution::ParallelWith(n),
        }
    }

    fn map_indices<T, F>(self, count: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        match self {
            Execution::Serial => (0..count).map(f).collect(),
            Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
            Execution::ParallelWith(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
                pool.install(|| (0..count).into_par_iter().map(f).collect())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: ModelConfig,
    pub policy: PolicyDescriptor,
    pub replications: u64,
    pub base_seed: u64,
    pub oracle_replications: u64,
    pub record_trajectory: bool,
}

impl ExperimentSpec {
    pub fn new(
        config: ModelConfig,
        policy: PolicyDescriptor,
        replications: u64,
        base_seed: u64,
    ) -> Self {
        Self {
            config,
            policy,
            replications,
            base_seed,
            oracle_replications: replications.max(MIN_ORACLE_REPLICATIONS),
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidExperiment("replications must be >= 1".into()));
        }
        self.policy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub cumulative_reward: u64,
    pub successes: Vec<u64>,
}

/// Summary of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: u64,
    /// `Γ_T`.
    pub total_reward: u64,
    pub successes: Vec<u64>,
    pub pulls: Vec<u64>,
    pub events: PolicyEvents,
    /// The best arm never earned a reward.
    pub starved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

fn trajectory_stride(horizon: u64) -> u64 {
    horizon.div_ceil(MAX_TRAJECTORY_POINTS).max(1)
}

/// Runs `policy` on `config` for the full horizon with the streams of
/// `(base_seed, domain, replication)`.
pub fn simulate(
    config: &ModelConfig,
    policy: &PolicyDescriptor,
    base_seed: u64,
    domain: Domain,
    replication: u64,
    record_trajectory: bool,
) -> Result<RunRecord> {
    let mut policy = policy.build(config)?;
    let mut streams = ReplicationStreams::new(base_seed, domain, replication);
    let mut env = Environment::new(config);
    let horizon = config.horizon();
    let stride = trajectory_stride(horizon);
    let mut trajectory = record_trajectory.then(Vec::new);
    let mut candidates = Vec::with_capacity(config.arms());
    let mut reward = 0u64;

    for t in 1..=horizon {
        let arm = {
            let obs = env.state().observation();
            choose(
                policy.as_mut(),
                t,
                &obs,
                &mut candidates,
                &mut streams.tie_break,
            )
        };
        let outcome = env.step(arm, &mut streams.env)?;
        reward += outcome.reward as u64;
        policy.observe(&outcome)?;
        if let Some(points) = trajectory.as_mut() {
            if t % stride == 0 || t == horizon {
                points.push(TrajectoryPoint {
                    t,
                    cumulative_reward: reward,
                    successes: env.state().successes().to_vec(),
                });
            }
        }
    }
    policy.finish(&env.state().observation());

    let state = env.into_state();
    debug_assert_eq!(state.total_reward(), reward);
    Ok(RunRecord {
        replication,
        total_reward: reward,
        starved: state.successes()[config.best_arm()] == 0,
        successes: state.successes().to_vec(),
        pulls: state.pulls().to_vec(),
        events: policy.events(),
        trajectory,
    })
}

/// One replication of the policy under evaluation.
pub fn run_replication(spec: &ExperimentSpec, replication: u64) -> Result<RunRecord> {
    simulate(
        &spec.config,
        &spec.policy,
        spec.base_seed,
        Domain::Policy,
        replication,
        spec.record_trajectory,
    )
}

pub fn run_replications(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    exec.map_indices(spec.replications, |i| run_replication(spec, i))
}

/// Monte Carlo estimate of the oracle's expected reward `E[Γ*_T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub mean: f64,
    pub se: f64,
    pub replications: u64,
}

pub fn estimate_oracle_baseline(spec: &ExperimentSpec, exec: Execution) -> Result<Baseline> {
    oracle_baseline(&spec.config, spec.oracle_replications, spec.base_seed, exec)
}

pub fn oracle_baseline(
    config: &ModelConfig,
    replications: u64,
    base_seed: u64,
    exec: Execution,
) -> Result<Baseline> {
    if replications < MIN_ORACLE_REPLICATIONS {
        return Err(Error::InvalidExperiment(format!(
            "oracle baseline needs at least {MIN_ORACLE_REPLICATIONS} replications, got {replications}"
        )));
    }
    let rewards = exec.map_indices(replications, |i| {
        simulate(
            config,
            &PolicyDescriptor::Oracle,
            base_seed,
            Domain::OracleBaseline,
            i,
            false,
        )
        .map(|r| r.total_reward as f64)
    })?;
    Ok(Baseline {
        mean: stats::mean(&rewards),
        se: stats::standard_error(&rewards),
        replications,
    })
}

/// Pseudo-regret summary of a set of replications against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub replications: u64,
    pub baseline: Baseline,
    pub mean_reward: f64,
    /// `E[Γ*_T] − mean Γ_T`.
    pub mean_regret: f64,
    pub se: f64,
    pub quantiles: Quantiles,
    pub starvation_frequency: f64,
    /// Per-replication pseudo-regret, ordered by replication index.
    pub samples: Vec<f64>,
}

pub fn aggregate(records: &[RunRecord], baseline: &Baseline) -> Result<Aggregate> {
    if records.is_empty() {
        return Err(Error::InvalidExperiment(
            "cannot aggregate zero records".into(),
        ));
    }
    let mut ordered: Vec<&RunRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.replication);
    let rewards: Vec<f64> = ordered.iter().map(|r| r.total_reward as f64).collect();
    let samples: Vec<f64> = rewards.iter().map(|g| baseline.mean - g).collect();
    let starved = ordered.iter().filter(|r| r.starved).count();
    Ok(Aggregate {
        replications: records.len() as u64,
        baseline: *baseline,
        mean_reward: stats::mean(&rewards),
        mean_regret: stats::mean(&samples),
        se: stats::standard_error(&samples),
        quantiles: Quantiles::of(&samples),
        starvation_frequency: starved as f64 / records.len() as f64,
        samples,
    })
}

/// A set of policies evaluated over a grid of horizons and exponents.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub config: ModelConfig,
    pub policies: Vec<PolicyDescriptor>,
    /// Empty: the configuration's horizon.
    pub horizons: Vec<u64>,
    /// Empty: the configuration's externality.
    pub alphas: Vec<f64>,
    pub replications: u64,
    pub base_seed: u64,
    pub oracle_replications: u64,
    pub record_trajectory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub horizon: u64,
    /// `None` for externalities other than `x^α`.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub point: GridPoint,
    pub policy: PolicyDescriptor,
    pub aggregate: Aggregate,
    pub records: Vec<RunRecord>,
    pub wall_seconds: f64,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<(GridPoint, ModelConfig)>> {
        let horizons = if self.horizons.is_empty() {
            vec![self.config.horizon()]
        } else {
            self.horizons.clone()
        };
        let mut out = Vec::new();
        for &h in &horizons {
            let base = self.config.with_horizon(h)?;
            if self.alphas.is_empty() {
                out.push((
                    GridPoint {
                        horizon: h,
                        alpha: base.alpha(),
                    },
                    base,
                ));
            } else {
                for &a in &self.alphas {
                    let c = base.with_externality(crate::env::Externality::power(a))?;
                    out.push((
                        GridPoint {
                            horizon: h,
                            alpha: Some(a),
                        },
                        c,
                    ));
                }
            }
        }
        Ok(out)
    }
}

/// One aggregate per (grid point, policy), grid-major, in input order.
/// The baseline is estimated once per grid point and shared by its policies.
pub fn sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepCell>> {
    if spec.policies.is_empty() {
        return Err(Error::InvalidExperiment("policy list is empty".into()));
    }
    if spec.replications == 0 {
        return Err(Error::InvalidExperiment("replications must be >= 1".into()));
    }
    for p in &spec.policies {
        p.validate()?;
    }
    let mut cells = Vec::new();
    for (point, config) in spec.grid()? {
        let baseline = oracle_baseline(&config, spec.oracle_replications, spec.base_seed, exec)?;
        for policy in &spec.policies {
            let started = Instant::now();
            let exp = ExperimentSpec {
                config: config.clone(),
                policy: policy.clone(),
                replications: spec.replications,
                base_seed: spec.base_seed,
                oracle_replications: spec.oracle_replications,
                record_trajectory: spec.record_trajectory,
            };
            let records = run_replications(&exp, exec)?;
            let aggregate = aggregate(&records, &baseline)?;
            cells.push(SweepCell {
                point,
                policy: policy.clone(),
                aggregate,
                records,
                wall_seconds: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(cells)
}
