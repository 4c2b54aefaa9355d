use super::{argmax_set, Policy, PolicyDescriptor, PolicyEvents, TauRule};
use crate::env::Observation;

/// REC(τ): uniform random pulls for `t ≤ τ`, then commit to an arm with the
/// most successes at `τ`.
#[derive(Debug, Clone)]
pub struct RandomExploreCommit {
    arms: usize,
    rule: TauRule,
    tau: u64,
    committing: bool,
    committed: Option<(u64, usize)>,
}

impl RandomExploreCommit {
    pub fn new(arms: usize, rule: TauRule, horizon: u64) -> Self {
        Self {
            arms,
            rule,
            tau: rule.resolve(horizon),
            committing: false,
            committed: None,
        }
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn committed_arm(&self) -> Option<usize> {
        self.committed.map(|(_, a)| a)
    }
}

impl Policy for RandomExploreCommit {
    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Rec { tau: self.rule }
    }

    fn decide(&mut self, t: u64, obs: &Observation<'_>, candidates: &mut Vec<usize>) {
        if let Some((_, arm)) = self.committed {
            candidates.push(arm);
        } else if t <= self.tau {
            candidates.extend(0..self.arms);
        } else {
            // first step after exploration: obs holds S_a(τ)
            argmax_set(obs.successes, candidates);
            self.committing = true;
        }
    }

    fn commit(&mut self, t: u64, arm: usize) {
        if self.committing {
            self.committed = Some((t, arm));
            self.committing = false;
        }
    }

    fn events(&self) -> PolicyEvents {
        PolicyEvents::Rec {
            tau: self.tau,
            commit_time: self.committed.map(|(t, _)| t),
            committed_arm: self.committed_arm(),
        }
    }

    fn boxed_clone(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
