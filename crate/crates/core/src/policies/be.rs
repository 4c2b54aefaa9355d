use super::{argmin_set, Policy, PolicyDescriptor, PolicyEvents};
use crate::env::Observation;

/// Success target `n = ⌈w_T ln T⌉` with `w_T = β ln ln T`, at least 1.
pub fn exploration_target(horizon: u64, beta: f64) -> u64 {
    let log_t = (horizon as f64).ln();
    let w = beta * log_t.ln();
    let n = (w * log_t).ceil();
    if n.is_finite() && n >= 1.0 {
        n as u64
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BePhase {
    Exploration,
    Exploitation,
}

/// Balanced exploration: pull the arm with fewest successes until every arm
/// has `n`, then exploit the arm that needed the fewest pulls.
#[derive(Debug, Clone)]
pub struct BalancedExploration {
    beta: f64,
    n_override: Option<u64>,
    n: u64,
    phase: BePhase,
    tau_n: Option<u64>,
    exploit_arm: Option<usize>,
    capped: bool,
    switching: bool,
}

impl BalancedExploration {
    pub fn new(arms: usize, horizon: u64, beta: f64, n: Option<u64>) -> Self {
        debug_assert!(arms >= 1);
        Self {
            beta,
            n_override: n,
            n: n.unwrap_or_else(|| exploration_target(horizon, beta)),
            phase: BePhase::Exploration,
            tau_n: None,
            exploit_arm: None,
            capped: false,
            switching: false,
        }
    }

    pub fn target(&self) -> u64 {
        self.n
    }

    pub fn phase(&self) -> BePhase {
        self.phase
    }

    pub fn tau_n(&self) -> Option<u64> {
        self.tau_n
    }

    pub fn exploit_arm(&self) -> Option<usize> {
        self.exploit_arm
    }
}

impl Policy for BalancedExploration {
    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Be {
            beta: self.beta,
            n: self.n_override,
        }
    }

    fn decide(&mut self, t: u64, obs: &Observation<'_>, candidates: &mut Vec<usize>) {
        if self.phase == BePhase::Exploration && obs.successes.iter().all(|&s| s >= self.n) {
            self.phase = BePhase::Exploitation;
            self.tau_n = Some(t - 1);
            argmin_set(obs.pulls.iter().copied().enumerate(), candidates);
            self.switching = true;
            return;
        }
        match self.phase {
            BePhase::Exploration => {
                argmin_set(obs.successes.iter().copied().enumerate(), candidates)
            }
            BePhase::Exploitation => candidates.push(self.exploit_arm.expect("exploit arm set")),
        }
    }

    fn commit(&mut self, _t: u64, arm: usize) {
        if self.switching {
            self.exploit_arm = Some(arm);
            self.switching = false;
        }
    }

    fn finish(&mut self, obs: &Observation<'_>) {
        if self.phase == BePhase::Exploration {
            self.capped = obs.successes.iter().any(|&s| s < self.n);
            self.tau_n = Some(obs.t);
            // diagnostic only; lowest index among the least-pulled arms
            let mut c = Vec::new();
            argmin_set(obs.pulls.iter().copied().enumerate(), &mut c);
            self.exploit_arm = c.first().copied();
        }
    }

    fn events(&self) -> PolicyEvents {
        PolicyEvents::Be {
            n: self.n,
            tau_n: self.tau_n,
            exploit_arm: self.exploit_arm,
            capped: self.capped,
        }
    }

    fn boxed_clone(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
