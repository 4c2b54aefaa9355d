use super::{Policy, PolicyDescriptor, PolicyEvents};
use crate::env::{Externality, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

/// Model knowledge granted to BE-AE: `θ`, `f`, `m` (the length of `θ`) and `T`.
#[derive(Debug, Clone)]
pub struct SideInformation {
    theta: Vec<f64>,
    externality: Externality,
    horizon: u64,
}

impl SideInformation {
    pub fn new(theta: Vec<f64>, externality: Externality, horizon: u64) -> Self {
        Self {
            theta,
            externality,
            horizon,
        }
    }

    pub fn arms(&self) -> usize {
        self.theta.len()
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// `λ_arm` given the success counts before the step.
    pub fn arrival_prob(&self, successes: &[u64], arm: usize) -> f64 {
        let mut total = 0.0;
        let mut own = 0.0;
        for (a, (&s, &th)) in successes.iter().zip(&self.theta).enumerate() {
            let w = self.externality.eval(s as f64 + th);
            total += w;
            if a == arm {
                own = w;
            }
        }
        own / total
    }
}

/// `c = min_{a,b} θ_a / (m (1 + θ_b))`.
pub fn lambda_floor(theta: &[f64]) -> f64 {
    let m = theta.len() as f64;
    let min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    min / (m * (1.0 + max))
}

/// Importance-weighted mean `T_a^{-1} Σ_k X_k / λ_a(k)` over the pulls of
/// `arm` in `history` (pulled arm, reward) replayed from the start.
pub fn estimator_mean(
    history: &[(usize, bool)],
    arm: usize,
    side: &SideInformation,
) -> Result<f64> {
    let mut successes = vec![0u64; side.arms()];
    let mut pulls = 0u64;
    let mut sum = CompensatedSum::new();
    for &(a, x) in history {
        if a >= side.arms() {
            return Err(Error::ArmOutOfRange {
                arm: a,
                arms: side.arms(),
            });
        }
        if a == arm {
            pulls += 1;
            if x {
                sum.add(1.0 / side.arrival_prob(&successes, a));
            }
        }
        if x {
            successes[a] += 1;
        }
    }
    if pulls == 0 {
        return Err(Error::InvalidExperiment(format!(
            "arm {arm} was never pulled; its estimate is undefined"
        )));
    }
    Ok(sum.value() / pulls as f64)
}

/// Balanced exploration with arm elimination.
///
/// Pulls the active arm with fewest successes (lowest index on ties) and,
/// after every step, drops each active arm whose upper bound falls below
/// some active arm's lower bound. Bounds are
/// `μ̂_a ± p √(ln T / T_a)` around the importance-weighted mean, and are
/// infinite until the arm has been pulled.
#[derive(Debug, Clone)]
pub struct BalancedElimination {
    side: SideInformation,
    p: f64,
    p_given: Option<f64>,
    log_horizon: f64,
    floor: f64,
    check_floor: bool,
    active: Vec<bool>,
    pulls: Vec<u64>,
    successes: Vec<u64>,
    weighted: Vec<CompensatedSum>,
    elimination_times: Vec<Option<u64>>,
}

impl BalancedElimination {
    pub fn new(side: SideInformation, p: Option<f64>) -> Result<Self> {
        let m = side.arms();
        if m == 0 {
            return Err(Error::InvalidModel("no arms".into()));
        }
        let floor = lambda_floor(&side.theta);
        let scale = p.unwrap_or_else(|| default_scale(floor));
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidExperiment(format!(
                "be_ae p must be > 0, got {scale}"
            )));
        }
        // λ ≥ c holds for x^α with α ≤ 1; stronger externalities can push an
        // active arm below c.
        let check_floor = matches!(side.externality.alpha(), Some(a) if a <= 1.0);
        Ok(Self {
            log_horizon: (side.horizon as f64).ln(),
            p: scale,
            p_given: p,
            floor,
            check_floor,
            active: vec![true; m],
            pulls: vec![0; m],
            successes: vec![0; m],
            weighted: vec![CompensatedSum::new(); m],
            elimination_times: vec![None; m],
            side,
        })
    }

    pub fn scale(&self) -> f64 {
        self.p
    }

    pub fn lambda_floor(&self) -> f64 {
        self.floor
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// `μ̂_a`, or `None` before the first pull of `arm`.
    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.pulls[arm] > 0).then(|| self.weighted[arm].value() / self.pulls[arm] as f64)
    }

    /// `(l_a, u_a)`.
    pub fn bounds(&self, arm: usize) -> (f64, f64) {
        match self.mean(arm) {
            None => (f64::NEG_INFINITY, f64::INFINITY),
            Some(m) => {
                let w = self.p * (self.log_horizon / self.pulls[arm] as f64).sqrt();
                (m - w, m + w)
            }
        }
    }

    /// Arrival probabilities the policy computes for its active arms.
    pub fn active_arrival_probs(&self) -> Vec<(usize, f64)> {
        (0..self.side.arms())
            .filter(|&a| self.active[a])
            .map(|a| (a, self.side.arrival_prob(&self.successes, a)))
            .collect()
    }

    fn eliminate(&mut self, t: u64) {
        let best_lower = (0..self.active.len())
            .filter(|&a| self.active[a])
            .map(|a| self.bounds(a).0)
            .fold(f64::NEG_INFINITY, f64::max);
        for a in 0..self.active.len() {
            if self.active[a] && self.bounds(a).1 < best_lower {
                self.active[a] = false;
                self.elimination_times[a] = Some(t);
            }
        }
        debug_assert!(self.active.iter().any(|&a| a));
    }
}

fn default_scale(floor: f64) -> f64 {
    5.0 / floor.sqrt()
}

impl Policy for BalancedElimination {
    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::BeAe { p: self.p_given }
    }

    fn decide(&mut self, _t: u64, _obs: &Observation<'_>, candidates: &mut Vec<usize>) {
        let arm = (0..self.active.len())
            .filter(|&a| self.active[a])
            .min_by_key(|&a| (self.successes[a], a))
            .expect("active set is never empty");
        candidates.push(arm);
    }

    fn observe(&mut self, outcome: &StepOutcome) -> Result<()> {
        let arm = outcome.arm;
        if arm >= self.active.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.active.len(),
            });
        }
        let lambda = self.side.arrival_prob(&self.successes, arm);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Internal(format!(
                "arrival probability {lambda} for arm {arm} at t = {}",
                outcome.t
            )));
        }
        if cfg!(debug_assertions) && self.check_floor {
            for (a, l) in self.active_arrival_probs() {
                debug_assert!(
                    l >= self.floor * (1.0 - 1e-12),
                    "active arm {a} has arrival probability {l} below floor {}",
                    self.floor
                );
            }
        }
        self.pulls[arm] += 1;
        if outcome.reward {
            self.successes[arm] += 1;
            self.weighted[arm].add(1.0 / lambda);
        }
        self.eliminate(outcome.t);
        Ok(())
    }

    fn events(&self) -> PolicyEvents {
        PolicyEvents::BeAe {
            elimination_times: self.elimination_times.clone(),
        }
    }

    fn boxed_clone(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side(theta: &[f64], alpha: f64, horizon: u64) -> SideInformation {
        SideInformation::new(theta.to_vec(), Externality::power(alpha), horizon)
    }

    fn outcome(t: u64, arm: usize, reward: bool) -> StepOutcome {
        StepOutcome {
            t,
            arm,
            preferred: reward,
            reward,
            arrival_prob: f64::NAN,
        }
    }

    #[test]
    fn default_scale_for_unit_theta() {
        // c = min θ_a / (m (1 + θ_b)) = 1 / (2 · 2)
        let p = BalancedElimination::new(side(&[1.0, 1.0], 1.0, 100), None).unwrap();
        assert_eq!(p.lambda_floor(), 0.25);
        assert_eq!(p.scale(), 10.0);
        assert!((lambda_floor(&[1.0, 3.0, 2.0]) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn single_weighted_observation() {
        let s = side(&[1.0, 1.0], 1.0, 100);
        assert_eq!(estimator_mean(&[(0, true)], 0, &s).unwrap(), 2.0);
        assert_eq!(estimator_mean(&[(0, false)], 0, &s).unwrap(), 0.0);
        assert!(estimator_mean(&[(1, true)], 0, &s).is_err());
    }

    #[test]
    fn pulls_fewest_successes_lexicographically() {
        let mut p =
            BalancedElimination::new(side(&[1.0, 1.0, 1.0], 1.0, 1000), Some(10.0)).unwrap();
        let z = [0u64; 3];
        let obs = Observation {
            t: 0,
            pulls: &z,
            successes: &z,
        };
        let mut c = Vec::new();
        p.decide(1, &obs, &mut c);
        assert_eq!(c, vec![0]);
        p.observe(&outcome(1, 0, true)).unwrap();
        c.clear();
        p.decide(2, &obs, &mut c);
        assert_eq!(c, vec![1]);
    }

    #[test]
    fn incremental_mean_matches_replay() {
        let s = side(&[1.0, 2.0], 0.7, 50);
        let mut p = BalancedElimination::new(s.clone(), Some(1e6)).unwrap();
        let history = [
            (0, true),
            (1, false),
            (1, true),
            (0, false),
            (0, true),
            (1, true),
        ];
        for (i, &(a, x)) in history.iter().enumerate() {
            p.observe(&outcome(i as u64 + 1, a, x)).unwrap();
        }
        for a in 0..2 {
            let replay = estimator_mean(&history, a, &s).unwrap();
            assert!((p.mean(a).unwrap() - replay).abs() < 1e-12);
        }
    }

    #[test]
    fn eliminates_dominated_arm_and_never_pulls_it() {
        let mut p = BalancedElimination::new(side(&[1.0, 1.0], 1.0, 100), Some(0.01)).unwrap();
        p.observe(&outcome(1, 0, true)).unwrap();
        p.observe(&outcome(2, 1, false)).unwrap();
        assert_eq!(p.active(), &[true, false]);
        assert_eq!(
            p.events(),
            PolicyEvents::BeAe {
                elimination_times: vec![None, Some(2)]
            }
        );
        let z = [0u64; 2];
        let obs = Observation {
            t: 2,
            pulls: &z,
            successes: &z,
        };
        for t in 3..10 {
            let mut c = Vec::new();
            p.decide(t, &obs, &mut c);
            assert_eq!(c, vec![0]);
            p.observe(&outcome(t, 0, t % 2 == 0)).unwrap();
        }
        assert_eq!(p.active_count(), 1);
    }

    #[test]
    fn unpulled_arm_cannot_be_eliminated() {
        let mut p = BalancedElimination::new(side(&[1.0, 1.0], 1.0, 100), Some(1e-6)).unwrap();
        p.observe(&outcome(1, 0, true)).unwrap();
        assert_eq!(p.active(), &[true, true]);
        assert_eq!(p.bounds(1), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn rejects_out_of_range_outcome() {
        let mut p = BalancedElimination::new(side(&[1.0, 1.0], 1.0, 100), None).unwrap();
        assert!(p.observe(&outcome(1, 5, true)).is_err());
    }
}
