//! Decision rules behind a common stateful interface.
//!
//! A step of a policy is split in two: [`Policy::decide`] lists the arms the
//! rule is indifferent between at time `t`, the caller picks one uniformly
//! with its tie-break stream (see [`pick`]), and [`Policy::commit`] tells the
//! policy which arm was taken. Keeping the randomness outside the policy lets
//! the exhaustive enumerator in [`crate::bruteforce`] branch over every
//! tie-break with its exact probability.
//!
//! Each policy is built with only the knowledge its definition grants: the
//! oracle learns the best arm, BE-AE learns `θ`, `f`, `m` and `T`, and the
//! others learn at most `m` and `T`.

mod be;
mod beae;
mod oracle;
mod rec;
mod ucb;

pub use be::{exploration_target, BalancedExploration, BePhase};
pub use beae::{estimator_mean, lambda_floor, BalancedElimination, SideInformation};
pub use oracle::OraclePolicy;
pub use rec::RandomExploreCommit;
pub use ucb::Ucb;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ModelConfig, Observation, StepOutcome};
use crate::error::{Error, Result};

pub trait Policy: Send {
    fn descriptor(&self) -> PolicyDescriptor;

    /// Fills `candidates` with the arms this rule would pull at time `t`
    /// (1-based); the caller picks uniformly among them. `obs` holds the
    /// counts after `t - 1` steps.
    fn decide(&mut self, t: u64, obs: &Observation<'_>, candidates: &mut Vec<usize>);

    /// Records the arm actually pulled at time `t`.
    fn commit(&mut self, _t: u64, _arm: usize) {}

    fn observe(&mut self, _outcome: &StepOutcome) -> Result<()> {
        Ok(())
    }

    /// Called once after the last step.
    fn finish(&mut self, _obs: &Observation<'_>) {}

    fn events(&self) -> PolicyEvents {
        PolicyEvents::None
    }

    fn boxed_clone(&self) -> Box<dyn Policy>;
}

impl Clone for Box<dyn Policy> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// Uniform choice among `candidates`; draws from `rng` only on a real tie.
#[inline]
pub fn pick<R: Rng + ?Sized>(candidates: &[usize], rng: &mut R) -> usize {
    match candidates.len() {
        0 => panic!("policy produced no candidate arm"),
        1 => candidates[0],
        n => candidates[rng.random_range(0..n)],
    }
}

/// `decide` + `pick` + `commit`.
pub fn choose<R: Rng + ?Sized>(
    policy: &mut dyn Policy,
    t: u64,
    obs: &Observation<'_>,
    candidates: &mut Vec<usize>,
    rng: &mut R,
) -> usize {
    candidates.clear();
    policy.decide(t, obs, candidates);
    let arm = pick(candidates, rng);
    policy.commit(t, arm);
    arm
}

pub(crate) fn argmin_set<I>(values: I, out: &mut Vec<usize>)
where
    I: IntoIterator<Item = (usize, u64)>,
{
    out.clear();
    let mut best = u64::MAX;
    for (a, v) in values {
        if v < best {
            best = v;
            out.clear();
            out.push(a);
        } else if v == best {
            out.push(a);
        }
    }
}

pub(crate) fn argmax_set(values: &[u64], out: &mut Vec<usize>) {
    out.clear();
    let best = values.iter().copied().max().unwrap_or(0);
    out.extend((0..values.len()).filter(|&a| values[a] == best));
}

/// Exploration length rule for random-explore-then-commit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauRule {
    Named(TauName),
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauName {
    /// `⌊√T⌋`.
    Sqrt,
    /// `⌈ln T⌉`.
    Ln,
    /// Never commit: pull uniformly at random for the whole horizon.
    Horizon,
}

impl TauRule {
    pub const SQRT: TauRule = TauRule::Named(TauName::Sqrt);

    pub fn resolve(self, horizon: u64) -> u64 {
        match self {
            TauRule::Fixed(tau) => tau,
            TauRule::Named(TauName::Sqrt) => isqrt(horizon),
            TauRule::Named(TauName::Ln) => (horizon as f64).ln().ceil().max(0.0) as u64,
            TauRule::Named(TauName::Horizon) => horizon,
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::Fixed(t) => write!(f, "{t}"),
            TauRule::Named(TauName::Sqrt) => f.write_str("sqrt"),
            TauRule::Named(TauName::Ln) => f.write_str("ln"),
            TauRule::Named(TauName::Horizon) => f.write_str("horizon"),
        }
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn default_beta() -> f64 {
    2.0
}

/// Serializable name + parameters of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyDescriptor {
    Oracle,
    Ucb {
        gamma: f64,
    },
    Rec {
        tau: TauRule,
    },
    Be {
        #[serde(default = "default_beta")]
        beta: f64,
        /// Overrides the success target `⌈β ln ln T · ln T⌉`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    BeAe {
        /// Confidence scale; defaults to `5 / √c`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
}

impl PolicyDescriptor {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyDescriptor::Oracle => "oracle",
            PolicyDescriptor::Ucb { .. } => "ucb",
            PolicyDescriptor::Rec { .. } => "rec",
            PolicyDescriptor::Be { .. } => "be",
            PolicyDescriptor::BeAe { .. } => "be_ae",
        }
    }

    /// `key=value` list, `;`-separated, empty for the oracle.
    pub fn params(&self) -> String {
        match self {
            PolicyDescriptor::Oracle => String::new(),
            PolicyDescriptor::Ucb { gamma } => format!("gamma={gamma}"),
            PolicyDescriptor::Rec { tau } => format!("tau={tau}"),
            PolicyDescriptor::Be { beta, n: None } => format!("beta={beta}"),
            PolicyDescriptor::Be { beta, n: Some(n) } => format!("beta={beta};n={n}"),
            PolicyDescriptor::BeAe { p: None } => "p=default".into(),
            PolicyDescriptor::BeAe { p: Some(p) } => format!("p={p}"),
        }
    }

    pub fn label(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            self.name().to_string()
        } else {
            format!("{}({})", self.name(), params)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidExperiment(what));
        match *self {
            PolicyDescriptor::Ucb { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                bad(format!("ucb gamma must be > 0, got {gamma}"))
            }
            PolicyDescriptor::Be { beta, n } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    bad(format!("be beta must be > 0, got {beta}"))
                } else if n == Some(0) {
                    bad("be n must be >= 1".into())
                } else {
                    Ok(())
                }
            }
            PolicyDescriptor::BeAe { p: Some(p) } if !(p > 0.0 && p.is_finite()) => {
                bad(format!("be_ae p must be > 0, got {p}"))
            }
            _ => Ok(()),
        }
    }

    /// Instantiates the policy for `config`, handing it only what its
    /// definition is allowed to know.
    pub fn build(&self, config: &ModelConfig) -> Result<Box<dyn Policy>> {
        self.validate()?;
        let m = config.arms();
        let horizon = config.horizon();
        Ok(match *self {
            PolicyDescriptor::Oracle => Box::new(OraclePolicy::new(config.best_arm())),
            PolicyDescriptor::Ucb { gamma } => Box::new(Ucb::new(m, gamma)),
            PolicyDescriptor::Rec { tau } => Box::new(RandomExploreCommit::new(m, tau, horizon)),
            PolicyDescriptor::Be { beta, n } => {
                Box::new(BalancedExploration::new(m, horizon, beta, n))
            }
            PolicyDescriptor::BeAe { p } => {
                let side = SideInformation::new(
                    config.theta().to_vec(),
                    config.externality().clone(),
                    horizon,
                );
                Box::new(BalancedElimination::new(side, p)?)
            }
        })
    }
}

/// Policy-specific events reported with each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyEvents {
    #[default]
    None,
    Rec {
        tau: u64,
        commit_time: Option<u64>,
        committed_arm: Option<usize>,
    },
    Be {
        n: u64,
        /// End of exploration; equals the horizon when some arm never
        /// reached `n` successes.
        tau_n: Option<u64>,
        exploit_arm: Option<usize>,
        capped: bool,
    },
    BeAe {
        elimination_times: Vec<Option<u64>>,
    },
}
