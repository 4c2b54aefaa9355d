use super::{Policy, PolicyDescriptor};
use crate::env::Observation;

/// Pulls the best arm at every step.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    best: usize,
}

impl OraclePolicy {
    pub fn new(best: usize) -> Self {
        Self { best }
    }
}

impl Policy for OraclePolicy {
    fn descriptor(&self) -> PolicyDescriptor {
        PolicyDescriptor::Oracle
    }

    fn decide(&mut self, _t: u64, _obs: &Observation<'_>, candidates: &mut Vec<usize>) {
        candidates.push(self.best);
    }

    fn boxed_clone(&self) -> Box<dyn Policy> {
        Box::new(self.clone())
    }
}
