//! Multi-armed bandits with positive externalities.
//!
//! Users arrive with a preference set over the arms; an arm that has earned
//! rewards in the past is more likely to be preferred in the future. This
//! crate provides the arrival-and-reward process ([`env`]), the five decision
//! rules studied for it ([`policies`]), closed-form oracle bounds and
//! reference curves ([`analytic`]), an exhaustive-enumeration ground truth for
//! tiny instances ([`bruteforce`]) and a seeded, parallel Monte Carlo harness
//! for pseudo-regret ([`harness`]).
//!
//! Experiments are described by JSON files ([`config`]) and summarized as
//! CSV/JSON rows ([`results`]).

pub mod analytic;
pub mod bruteforce;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod policies;
pub mod results;
pub mod rng;
pub mod stats;

pub use env::{EnvState, Environment, Externality, ModelConfig, Observation, StepOutcome};
pub use error::{Error, Result};
pub use harness::{Aggregate, Baseline, Execution, ExperimentSpec, RunRecord};
pub use policies::{Policy, PolicyDescriptor};
