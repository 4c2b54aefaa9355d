//! Exact expectations by exhaustive enumeration of outcome paths.
//!
//! Every node of the tree branches over the policy's tie-break candidates
//! (each with probability `1/k`), over the preference event and over the
//! Bernoulli reward. Arrival probabilities are recomputed here from the raw
//! counts instead of going through [`crate::env::Environment`], so the tree
//! is an independent check on the simulator.
//!
//! Path probabilities are products of at most 18 factors in `[0, 1]`; plain
//! `f64` products keep a relative error near `1e-15` and leaf sums use
//! compensated accumulation.

use crate::env::{ModelConfig, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::policies::{Policy, PolicyDescriptor};
use crate::stats::CompensatedSum;

pub const MAX_HORIZON: u64 = 6;
pub const MAX_ARMS: usize = 3;
pub const MAX_ESTIMATOR_HORIZON: usize = 5;

/// How the preference set is enumerated at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreferenceEnumeration {
    /// Two branches: the pulled arm is preferred or not.
    PulledArmOnly,
    /// `2^m` branches: every subset of arms as the preference set.
    FullSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enumeration {
    pub expected_reward: f64,
    /// Sum of all leaf probabilities; 1 up to rounding.
    pub total_probability: f64,
    pub leaves: u64,
}

fn lambda(config: &ModelConfig, successes: &[u64], arm: usize) -> f64 {
    let f = config.externality();
    let weight = |a: usize| f.eval(successes[a] as f64 + config.theta()[a]);
    let total: f64 = (0..config.arms()).map(weight).sum();
    weight(arm) / total
}

fn check_bounds(config: &ModelConfig, horizon: u64) -> Result<()> {
    if horizon > MAX_HORIZON || config.arms() > MAX_ARMS {
        return Err(Error::EnumerationBound(format!(
            "exact enumeration supports T <= {MAX_HORIZON} and m <= {MAX_ARMS}, got T = {horizon}, m = {}",
            config.arms()
        )));
    }
    Ok(())
}

/// `E[Γ_T]` for `policy` on `config` over `horizon` steps.
pub fn exact_expected_reward(
    policy: &PolicyDescriptor,
    config: &ModelConfig,
    horizon: u64,
) -> Result<f64> {
    Ok(enumerate(
        policy,
        config,
        horizon,
        PreferenceEnumeration::PulledArmOnly,
    )?
    .expected_reward)
}

pub fn enumerate(
    policy: &PolicyDescriptor,
    config: &ModelConfig,
    horizon: u64,
    mode: PreferenceEnumeration,
) -> Result<Enumeration> {
    check_bounds(config, horizon)?;
    let config = config.with_horizon(horizon.max(1))?;
    let policy = policy.build(&config)?;
    let mut walk = Walk {
        config: &config,
        horizon,
        mode,
        expected: CompensatedSum::new(),
        total: CompensatedSum::new(),
        leaves: 0,
    };
    let m = config.arms();
    walk.visit(policy, &mut vec![0; m], &mut vec![0; m], 0, 1.0, 0)?;
    Ok(Enumeration {
        expected_reward: walk.expected.value(),
        total_probability: walk.total.value(),
        leaves: walk.leaves,
    })
}

struct Walk<'c> {
    config: &'c ModelConfig,
    horizon: u64,
    mode: PreferenceEnumeration,
    expected: CompensatedSum,
    total: CompensatedSum,
    leaves: u64,
}

impl Walk<'_> {
    fn visit(
        &mut self,
        policy: Box<dyn Policy>,
        pulls: &mut Vec<u64>,
        successes: &mut Vec<u64>,
        t: u64,
        prob: f64,
        reward: u64,
    ) -> Result<()> {
        if t == self.horizon {
            self.leaves += 1;
            self.total.add(prob);
            self.expected.add(prob * reward as f64);
            return Ok(());
        }
        let step = t + 1;
        let mut candidates = Vec::new();
        let mut decider = policy.boxed_clone();
        decider.decide(
            step,
            &Observation {
                t,
                pulls,
                successes,
            },
            &mut candidates,
        );
        let k = candidates.len() as f64;
        for &arm in &candidates {
            let mut chosen = decider.boxed_clone();
            chosen.commit(step, arm);
            let lam = lambda(self.config, successes, arm);
            let mu = self.config.mu()[arm];
            for (preferred, rewarded, p) in self.outcomes(successes, arm, lam, mu) {
                if p == 0.0 {
                    continue;
                }
                let mut next = chosen.boxed_clone();
                next.observe(&StepOutcome {
                    t: step,
                    arm,
                    preferred,
                    reward: rewarded,
                    arrival_prob: lam,
                })?;
                pulls[arm] += 1;
                successes[arm] += rewarded as u64;
                self.visit(
                    next,
                    pulls,
                    successes,
                    step,
                    prob * p / k,
                    reward + rewarded as u64,
                )?;
                pulls[arm] -= 1;
                successes[arm] -= rewarded as u64;
            }
        }
        Ok(())
    }

    /// `(preferred, rewarded, probability)` branches for pulling `arm`.
    fn outcomes(&self, successes: &[u64], arm: usize, lam: f64, mu: f64) -> Vec<(bool, bool, f64)> {
        match self.mode {
            PreferenceEnumeration::PulledArmOnly => vec![
                (true, true, lam * mu),
                (true, false, lam * (1.0 - mu)),
                (false, false, 1.0 - lam),
            ],
            PreferenceEnumeration::FullSet => {
                let m = self.config.arms();
                let lambdas: Vec<f64> = (0..m).map(|a| lambda(self.config, successes, a)).collect();
                let mut out = Vec::new();
                for set in 0u32..(1 << m) {
                    let p_set: f64 = (0..m)
                        .map(|a| {
                            if set & (1 << a) != 0 {
                                lambdas[a]
                            } else {
                                1.0 - lambdas[a]
                            }
                        })
                        .product();
                    if set & (1 << arm) != 0 {
                        out.push((true, true, p_set * mu));
                        out.push((true, false, p_set * (1.0 - mu)));
                    } else {
                        out.push((false, false, p_set));
                    }
                }
                out
            }
        }
    }
}

/// Exact expectation of the importance-weighted mean of `arm` when the arms
/// in `sequence` are pulled in order.
pub fn exact_estimator_expectation(
    config: &ModelConfig,
    sequence: &[usize],
    arm: usize,
) -> Result<f64> {
    if sequence.len() > MAX_ESTIMATOR_HORIZON || config.arms() > MAX_ARMS {
        return Err(Error::EnumerationBound(format!(
            "estimator enumeration supports sequences of length <= {MAX_ESTIMATOR_HORIZON}, got {}",
            sequence.len()
        )));
    }
    if let Some(&a) = sequence.iter().find(|&&a| a >= config.arms()) {
        return Err(Error::ArmOutOfRange {
            arm: a,
            arms: config.arms(),
        });
    }
    let pulls = sequence.iter().filter(|&&a| a == arm).count();
    if pulls == 0 {
        return Err(Error::InvalidExperiment(format!(
            "arm {arm} never pulled in the sequence; its estimate is undefined"
        )));
    }
    let mut acc = CompensatedSum::new();
    let mut successes = vec![0u64; config.arms()];
    estimator_walk(config, sequence, arm, &mut successes, 1.0, 0.0, &mut acc);
    Ok(acc.value() / pulls as f64)
}

fn estimator_walk(
    config: &ModelConfig,
    rest: &[usize],
    arm: usize,
    successes: &mut [u64],
    prob: f64,
    weighted: f64,
    acc: &mut CompensatedSum,
) {
    let Some((&a, tail)) = rest.split_first() else {
        acc.add(prob * weighted);
        return;
    };
    let lam = lambda(config, successes, a);
    let p_reward = lam * config.mu()[a];
    if p_reward > 0.0 {
        successes[a] += 1;
        let w = if a == arm {
            weighted + 1.0 / lam
        } else {
            weighted
        };
        estimator_walk(config, tail, arm, successes, prob * p_reward, w, acc);
        successes[a] -= 1;
    }
    if p_reward < 1.0 {
        estimator_walk(
            config,
            tail,
            arm,
            successes,
            prob * (1.0 - p_reward),
            weighted,
            acc,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Externality;
    use crate::policies::TauRule;

    fn all_policies() -> Vec<PolicyDescriptor> {
        vec![
            PolicyDescriptor::Oracle,
            PolicyDescriptor::Ucb { gamma: 3.0 },
            PolicyDescriptor::Rec {
                tau: TauRule::Fixed(2),
            },
            PolicyDescriptor::Be {
                beta: 2.0,
                n: Some(1),
            },
            PolicyDescriptor::BeAe { p: Some(0.5) },
        ]
    }

    #[test]
    fn oracle_single_step() {
        let c = ModelConfig::two_arm_reference(1);
        let v = exact_expected_reward(&PolicyDescriptor::Oracle, &c, 1).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let ub = crate::analytic::oracle_upper_bound(&c, 1).unwrap();
        assert!((v - ub).abs() < 1e-15);
    }

    #[test]
    fn oracle_two_steps_by_hand() {
        // S_1(1) = 1 w.p. 1/4 (then λ = 2/3), else λ = 1/2.
        let by_hand = 0.25 + 0.25 * (2.0 / 3.0) * 0.5 + 0.75 * 0.5 * 0.5;
        let c = ModelConfig::two_arm_reference(2);
        let v = exact_expected_reward(&PolicyDescriptor::Oracle, &c, 2).unwrap();
        assert!((v - by_hand).abs() < 1e-12);
        assert!((v - 0.5208333333333333).abs() < 1e-12);
    }

    #[test]
    fn zero_means_give_zero_reward() {
        let c =
            ModelConfig::unvalidated(vec![0.0, 0.0], vec![1.0, 1.0], Externality::power(1.0), 4);
        for p in all_policies() {
            assert_eq!(
                exact_expected_reward(&p, &c, 4).unwrap(),
                0.0,
                "{}",
                p.label()
            );
        }
    }

    #[test]
    fn leaf_probabilities_sum_to_one() {
        let c = ModelConfig::power(vec![0.5, 0.3, 0.7], vec![1.0, 2.0, 0.5], 1.3, 5).unwrap();
        for p in all_policies() {
            let e = enumerate(&p, &c, 5, PreferenceEnumeration::PulledArmOnly).unwrap();
            assert!((e.total_probability - 1.0).abs() < 1e-12, "{}", p.label());
        }
    }

    #[test]
    fn lazy_preference_matches_full_set() {
        let configs = [
            ModelConfig::two_arm_reference(4),
            ModelConfig::power(vec![0.5, 0.3, 0.7], vec![1.0, 2.0, 0.5], 0.6, 4).unwrap(),
        ];
        for c in &configs {
            for p in all_policies() {
                let lazy = enumerate(&p, c, 4, PreferenceEnumeration::PulledArmOnly).unwrap();
                let full = enumerate(&p, c, 4, PreferenceEnumeration::FullSet).unwrap();
                assert!(
                    (lazy.expected_reward - full.expected_reward).abs() < 1e-12,
                    "{}: {} vs {}",
                    p.label(),
                    lazy.expected_reward,
                    full.expected_reward
                );
                assert!((full.total_probability - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enumeration_bound_enforced() {
        let c = ModelConfig::two_arm_reference(7);
        assert!(matches!(
            exact_expected_reward(&PolicyDescriptor::Oracle, &c, 7),
            Err(Error::EnumerationBound(_))
        ));
        let c4 = ModelConfig::power(vec![0.1, 0.2, 0.3, 0.4], vec![1.0; 4], 1.0, 3).unwrap();
        assert!(exact_expected_reward(&PolicyDescriptor::Oracle, &c4, 3).is_err());
        assert!(exact_estimator_expectation(&c, &[0; 6], 0).is_err());
    }

    #[test]
    fn estimator_is_unbiased_on_fixed_sequences() {
        let c = ModelConfig::power(vec![0.5, 0.3], vec![1.0, 2.0], 1.0, 5).unwrap();
        let v = exact_estimator_expectation(&c, &[0, 1, 0], 0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let v = exact_estimator_expectation(&c, &[0, 0], 0).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert!(exact_estimator_expectation(&c, &[1, 1], 0).is_err());
    }

    #[test]
    fn estimator_deterministic_reward() {
        // μ = 1 with a single arm: λ = 1 and X = 1 always.
        let c = ModelConfig::unvalidated(vec![1.0], vec![1.0], Externality::power(1.0), 5);
        assert_eq!(exact_estimator_expectation(&c, &[0, 0, 0], 0).unwrap(), 1.0);
    }
}
