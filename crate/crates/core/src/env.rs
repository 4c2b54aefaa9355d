//! The positive-externality arrival-and-reward process.
//!
//! At step `t` each arm `a` is preferred by the arriving user independently
//! with probability
//!
//! ```text
//! λ_a(t) = f(N_a(t-1)) / Σ_b f(N_b(t-1)),    N_a = S_a + θ_a
//! ```
//!
//! and pulling `a` yields a Bernoulli(μ_a) reward only if `a` is preferred.
//! Only the pulled arm's membership in the preference set matters, so the
//! environment samples it alone from a single uniform `u`: the arm is
//! preferred iff `u < λ`, and rewarded iff `u < λ·μ`. This has the same joint
//! law as two independent draws and costs one draw per step.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increasing positive map from popularity to preference weight.
#[derive(Clone)]
pub enum Externality {
    /// `f(x) = x^α`.
    Power { alpha: f64 },
    /// `f(x) = (1 + ln(1 + x))^(1 + ε)`; grows like `ln^(1+ε) x`.
    LogPower { epsilon: f64 },
    /// User-supplied function. Must be positive and increasing on `(0, ∞)`.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Externality {
    pub fn power(alpha: f64) -> Self {
        Externality::Power { alpha }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Externality::Power { alpha } => {
                if *alpha == 1.0 {
                    x
                } else {
                    x.powf(*alpha)
                }
            }
            Externality::LogPower { epsilon } => (1.0 + x.ln_1p()).powf(1.0 + epsilon),
            Externality::Custom { f, .. } => f(x),
        }
    }

    /// The exponent α when `f(x) = x^α`.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Externality::Power { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Externality::Power { alpha } => format!("power(alpha={alpha})"),
            Externality::LogPower { epsilon } => format!("log_power(epsilon={epsilon})"),
            Externality::Custom { name, .. } => format!("custom({name})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Externality::Power { alpha } if !(alpha.is_finite() && *alpha > 0.0) => {
                Err(Error::InvalidModel(format!(
                    "externality exponent alpha must be > 0, got {alpha}"
                )))
            }
            Externality::LogPower { epsilon } if !(epsilon.is_finite() && *epsilon > 0.0) => Err(
                Error::InvalidModel(format!("log_power epsilon must be > 0, got {epsilon}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Debug for Externality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Arrival probabilities for a popularity vector.
pub fn arrival_probs_from_popularity(popularity: &[f64], externality: &Externality) -> Vec<f64> {
    let weights: Vec<f64> = popularity.iter().map(|&n| externality.eval(n)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Static description of a bandit instance.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    mu: Vec<f64>,
    theta: Vec<f64>,
    externality: Externality,
    horizon: u64,
    best: usize,
}

impl ModelConfig {
    /// Validates `m ≥ 2`, `μ_a ∈ (0, 1]`, `θ_a > 0`, a unique best arm and a
    /// positive horizon.
    pub fn new(
        mu: Vec<f64>,
        theta: Vec<f64>,
        externality: Externality,
        horizon: u64,
    ) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "at least 2 arms required, got {}",
                mu.len()
            )));
        }
        if theta.len() != mu.len() {
            return Err(Error::Dimension(format!(
                "theta has {} entries but mu has {}",
                theta.len(),
                mu.len()
            )));
        }
        if let Some((a, m)) = mu.iter().enumerate().find(|(_, &m)| !(m > 0.0 && m <= 1.0)) {
            return Err(Error::InvalidModel(format!(
                "mu[{a}] = {m} is outside (0, 1]"
            )));
        }
        if let Some((a, t)) = theta
            .iter()
            .enumerate()
            .find(|(_, &t)| !(t > 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidModel(format!(
                "theta[{a}] = {t} must be positive"
            )));
        }
        externality.validate()?;
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be positive".into()));
        }
        let best = argmax_first(&mu);
        if mu.iter().filter(|&&m| m == mu[best]).count() > 1 {
            return Err(Error::InvalidModel(format!(
                "mu must have a unique best arm; maximum {} is attained more than once",
                mu[best]
            )));
        }
        Ok(Self {
            mu,
            theta,
            externality,
            horizon,
            best,
        })
    }

    /// Convenience constructor for `f(x) = x^α`.
    pub fn power(mu: Vec<f64>, theta: Vec<f64>, alpha: f64, horizon: u64) -> Result<Self> {
        Self::new(mu, theta, Externality::power(alpha), horizon)
    }

    /// Builds a configuration without the modelling assumptions (single arm,
    /// zero means, tied best arms). Only for degenerate test instances;
    /// dimensions must still agree and θ must be positive.
    pub fn unvalidated(
        mu: Vec<f64>,
        theta: Vec<f64>,
        externality: Externality,
        horizon: u64,
    ) -> Self {
        assert_eq!(mu.len(), theta.len(), "mu/theta length mismatch");
        assert!(!mu.is_empty());
        assert!(theta.iter().all(|&t| t > 0.0));
        let best = argmax_first(&mu);
        Self {
            mu,
            theta,
            externality,
            horizon,
            best,
        }
    }

    /// m = 2, α = 1, μ = (0.5, 0.3), θ = (1, 1).
    pub fn two_arm_reference(horizon: u64) -> Self {
        Self::power(vec![0.5, 0.3], vec![1.0, 1.0], 1.0, horizon).expect("valid reference config")
    }

    pub fn arms(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn externality(&self) -> &Externality {
        &self.externality
    }

    pub fn alpha(&self) -> Option<f64> {
        self.externality.alpha()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// The unique arm with the largest mean.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    /// δ = min over suboptimal arms of `μ_best − μ_a`.
    pub fn gap(&self) -> f64 {
        let top = self.mu[self.best];
        self.mu
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != self.best)
            .map(|(_, &m)| top - m)
            .fold(f64::INFINITY, f64::min)
    }

    /// Δ = min_a μ_a.
    pub fn floor(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn with_horizon(&self, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be positive".into()));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    pub fn with_externality(&self, externality: Externality) -> Result<Self> {
        externality.validate()?;
        Ok(Self {
            externality,
            ..self.clone()
        })
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Counters of the process after `t` completed steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    t: u64,
    pulls: Vec<u64>,
    successes: Vec<u64>,
    popularity: Vec<f64>,
}

impl EnvState {
    pub fn reset(config: &ModelConfig) -> Self {
        let m = config.arms();
        Self {
            t: 0,
            pulls: vec![0; m],
            successes: vec![0; m],
            popularity: config.theta.clone(),
        }
    }

    /// A state with the given per-arm counts; `t` is the total pull count.
    pub fn from_counts(config: &ModelConfig, pulls: Vec<u64>, successes: Vec<u64>) -> Result<Self> {
        let m = config.arms();
        if pulls.len() != m || successes.len() != m {
            return Err(Error::Dimension(format!(
                "expected {m} arms, got pulls={} successes={}",
                pulls.len(),
                successes.len()
            )));
        }
        if let Some(a) = (0..m).find(|&a| successes[a] > pulls[a]) {
            return Err(Error::InvalidModel(format!(
                "arm {a} has more successes ({}) than pulls ({})",
                successes[a], pulls[a]
            )));
        }
        let popularity = successes
            .iter()
            .zip(&config.theta)
            .map(|(&s, &th)| s as f64 + th)
            .collect();
        Ok(Self {
            t: pulls.iter().sum(),
            pulls,
            successes,
            popularity,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    /// `N_a = S_a + θ_a`.
    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }

    pub fn total_reward(&self) -> u64 {
        self.successes.iter().sum()
    }

    pub fn observation(&self) -> Observation<'_> {
        Observation {
            t: self.t,
            pulls: &self.pulls,
            successes: &self.successes,
        }
    }
}

/// What every policy is allowed to see: counts and time.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Steps completed so far.
    pub t: u64,
    pub pulls: &'a [u64],
    pub successes: &'a [u64],
}

impl Observation<'_> {
    pub fn arms(&self) -> usize {
        self.pulls.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// The time index of this step (1-based).
    pub t: u64,
    pub arm: usize,
    pub preferred: bool,
    pub reward: bool,
    /// `λ_arm(t)` in effect for this step.
    pub arrival_prob: f64,
}

/// `λ_a(t)` for every arm, from the state before step `t`.
pub fn arrival_probs(state: &EnvState, config: &ModelConfig) -> Result<Vec<f64>> {
    if state.popularity.len() != config.arms() {
        return Err(Error::Dimension(format!(
            "state has {} arms, config has {}",
            state.popularity.len(),
            config.arms()
        )));
    }
    Ok(arrival_probs_from_popularity(
        &state.popularity,
        &config.externality,
    ))
}

/// A running instance of the process: configuration, state and cached
/// preference weights `f(N_a)`.
#[derive(Debug, Clone)]
pub struct Environment<'c> {
    config: &'c ModelConfig,
    state: EnvState,
    weights: Vec<f64>,
}

impl<'c> Environment<'c> {
    pub fn new(config: &'c ModelConfig) -> Self {
        Self::from_state(config, EnvState::reset(config)).expect("reset state matches config")
    }

    pub fn from_state(config: &'c ModelConfig, state: EnvState) -> Result<Self> {
        if state.popularity.len() != config.arms() {
            return Err(Error::Dimension(format!(
                "state has {} arms, config has {}",
                state.popularity.len(),
                config.arms()
            )));
        }
        let weights = state
            .popularity
            .iter()
            .map(|&n| config.externality.eval(n))
            .collect();
        Ok(Self {
            config,
            state,
            weights,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn into_state(self) -> EnvState {
        self.state
    }

    #[inline]
    pub fn arrival_prob(&self, arm: usize) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights[arm] / total
    }

    pub fn arrival_probs(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    /// Runs one step with `arm` pulled, consuming exactly one uniform from `rng`.
    pub fn step<R: Rng + ?Sized>(&mut self, arm: usize, rng: &mut R) -> Result<StepOutcome> {
        let m = self.config.arms();
        if arm >= m {
            return Err(Error::ArmOutOfRange { arm, arms: m });
        }
        if self.state.t >= self.config.horizon {
            return Err(Error::HorizonExceeded {
                step: self.state.t + 1,
                horizon: self.config.horizon,
            });
        }
        let lambda = self.arrival_prob(arm);
        let u: f64 = rng.random();
        let preferred = u < lambda;
        let reward = u < lambda * self.config.mu[arm];

        let s = &mut self.state;
        s.t += 1;
        s.pulls[arm] += 1;
        if reward {
            s.successes[arm] += 1;
            s.popularity[arm] = s.successes[arm] as f64 + self.config.theta[arm];
            self.weights[arm] = self.config.externality.eval(s.popularity[arm]);
        }
        Ok(StepOutcome {
            t: s.t,
            arm,
            preferred,
            reward,
            arrival_prob: lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(mu: &[f64], theta: &[f64], alpha: f64) -> ModelConfig {
        ModelConfig::power(mu.to_vec(), theta.to_vec(), alpha, 100).unwrap()
    }

    #[test]
    fn uniform_when_popularity_equal() {
        let c = cfg(&[0.5, 0.3], &[1.0, 1.0], 1.0);
        let p = arrival_probs(&EnvState::reset(&c), &c).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn linear_externality_direct_evaluation() {
        let c = cfg(&[0.5, 0.3], &[1.0, 1.0], 1.0);
        let s = EnvState::from_counts(&c, vec![1, 0], vec![1, 0]).unwrap();
        let p = arrival_probs(&s, &c).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn square_root_externality() {
        let c = cfg(&[0.5, 0.3], &[1.0, 1.0], 0.5);
        let s = EnvState::from_counts(&c, vec![3, 0], vec![3, 0]).unwrap();
        assert_eq!(s.popularity(), &[4.0, 1.0]);
        let p = arrival_probs(&s, &c).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let c2 = cfg(&[0.5, 0.3], &[1.0, 1.0], 1.0);
        let c3 = cfg(&[0.5, 0.3, 0.2], &[1.0, 1.0, 1.0], 1.0);
        let s = EnvState::reset(&c3);
        assert!(matches!(arrival_probs(&s, &c2), Err(Error::Dimension(_))));
        assert!(EnvState::from_counts(&c2, vec![1], vec![0]).is_err());
    }

    #[test]
    fn reset_sets_popularity_to_theta() {
        let c = cfg(&[0.5, 0.3], &[1.0, 3.0], 1.0);
        let s = EnvState::reset(&c);
        assert_eq!(s.t(), 0);
        assert_eq!(s.popularity(), &[1.0, 3.0]);
        assert_eq!(s.pulls().iter().sum::<u64>(), 0);
        assert_eq!(s.successes(), &[0, 0]);
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::power(vec![0.5], vec![1.0], 1.0, 10).is_err());
        assert!(ModelConfig::power(vec![0.5, 0.5], vec![1.0, 1.0], 1.0, 10)
            .unwrap_err()
            .to_string()
            .contains("unique best arm"));
        assert!(ModelConfig::power(vec![0.5, 0.0], vec![1.0, 1.0], 1.0, 10).is_err());
        assert!(ModelConfig::power(vec![0.5, 1.2], vec![1.0, 1.0], 1.0, 10).is_err());
        assert!(ModelConfig::power(vec![0.5, 0.3], vec![1.0, 0.0], 1.0, 10).is_err());
        assert!(ModelConfig::power(vec![0.5, 0.3], vec![1.0, 1.0], 0.0, 10).is_err());
        assert!(ModelConfig::power(vec![0.5, 0.3], vec![1.0, 1.0], 1.0, 0).is_err());
        assert!(ModelConfig::power(vec![0.5, 0.3], vec![1.0], 1.0, 10).is_err());
        let c = cfg(&[0.3, 0.5, 0.45], &[1.0, 2.0, 1.0], 1.0);
        assert_eq!(c.best_arm(), 1);
        assert!((c.gap() - 0.05).abs() < 1e-12);
        assert_eq!(c.floor(), 0.3);
    }

    #[test]
    fn unpreferred_pull_never_rewards() {
        let c = cfg(&[1.0, 0.3], &[1.0, 1.0], 1.0);
        let mut env = Environment::new(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let o = env.step(0, &mut rng).unwrap();
            assert!(!o.reward || o.preferred);
            if !o.preferred {
                assert!(!o.reward);
            }
        }
    }

    #[test]
    fn horizon_and_arm_checks() {
        let c = ModelConfig::power(vec![0.5, 0.3], vec![1.0, 1.0], 1.0, 2).unwrap();
        let mut env = Environment::new(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            env.step(2, &mut rng),
            Err(Error::ArmOutOfRange { .. })
        ));
        env.step(0, &mut rng).unwrap();
        env.step(1, &mut rng).unwrap();
        assert!(matches!(
            env.step(0, &mut rng),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn first_step_reward_probability_is_product() {
        // λ_1(1) μ_1 = 0.5 * 0.5
        let c = ModelConfig::two_arm_reference(1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut hits = 0u32;
        for _ in 0..n {
            let mut env = Environment::new(&c);
            hits += env.step(0, &mut rng).unwrap().reward as u32;
        }
        let p = hits as f64 / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((p - 0.25).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn single_arm_is_always_preferred() {
        let c = ModelConfig::unvalidated(vec![0.4], vec![2.0], Externality::power(1.5), 50);
        let mut env = Environment::new(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(env.arrival_prob(0), 1.0);
            assert!(env.step(0, &mut rng).unwrap().preferred);
        }
    }

    #[test]
    fn log_power_is_increasing_and_positive() {
        let f = Externality::LogPower { epsilon: 0.5 };
        let mut prev = 0.0;
        for i in 1..1000 {
            let v = f.eval(i as f64 * 0.37);
            assert!(v > prev);
            prev = v;
        }
    }
}
