use super::{Policy, PolicyDescriptor};
use crate::env::Observation;

/// UCB(γ): index `S_a/T_a + √(γ ln t / T_a)`, unpulled arms first.
#[derive(Debug, Clone)]
pub struct Ucb {
    arms: usize,
    gamma: f64,
}

impl Ucb {
    pub fn new(arms: usize, gamma: f64) -> Self {
        Self { arms, gamma }
    }

    /// The index of every arm at time `t`; `+∞` for unpulled arms.
    pub fn indices(&self, t: u64, obs: &Observation<'_>) -> Vec<f64> {
        let log_t = (t as f64).ln();
        (0..self.arms)
            .map(|a| index(self.gamma, log_t, obs.pulls[a], obs.successes[a]))
            .collect()
    }
}

#[inline]
fn index(gamma: f64, log_t: f64, pulls: u64, successes: u64) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    let n = pulls as f64;
    successes as f64 / n + (gamma * log_t / n).sqrt()
}

impl Policy for Ucb {
    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Ucb { gamma: self.gamma }
    }

    fn decide(&mut self, t: u64, obs: &Observation<'_>, candidates: &mut Vec<usize>) {
        let log_t = (t as f64).ln();
        let mut best = f64::NEG_INFINITY;
        for a in 0..self.arms {
            let u = index(self.gamma, log_t, obs.pulls[a], obs.successes[a]);
            if u > best {
                best = u;
                candidates.clear();
                candidates.push(a);
            } else if u == best {
                candidates.push(a);
            }
        }
    }

    fn boxed_clone(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
