//! Deterministic per-replication random streams.
//!
//! Every replication owns two ChaCha8 streams: one consumed by the
//! environment (one uniform per step) and one reserved for policy tie-breaks.
//! A stream is addressed by `(base_seed, domain, role, replication)`:
//!
//! * the 256-bit ChaCha key is four consecutive SplitMix64 outputs started
//!   from `mix(base_seed) ^ domain_tag ^ role_tag`;
//! * the ChaCha stream id is the replication index.
//!
//! Streams therefore depend only on their address, never on which thread ran
//! them or in which order, and the oracle baseline lives in a separate key
//! space from the policy runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which family of replications a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Replications of the policy under evaluation.
    Policy,
    /// Oracle runs used to estimate the expected oracle reward.
    OracleBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Environment,
    TieBreak,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Policy => 0x5a17_c0de_0000_0001,
            Domain::OracleBaseline => 0x0b5e_11e0_0000_0002,
        }
    }
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Environment => 0x00e7_0000_0000_0010,
            Role::TieBreak => 0x7b7b_0000_0000_0020,
        }
    }
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The 256-bit key shared by all replications of one `(seed, domain, role)`.
pub fn stream_key(base_seed: u64, domain: Domain, role: Role) -> [u8; 32] {
    let mut s = base_seed;
    let mut state = splitmix64(&mut s) ^ domain.tag() ^ role.tag();
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub fn stream(base_seed: u64, domain: Domain, role: Role, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(stream_key(base_seed, domain, role));
    rng.set_stream(replication);
    rng
}

/// Both streams for one replication.
#[derive(Debug, Clone)]
pub struct ReplicationStreams {
    pub env: ChaCha8Rng,
    pub tie_break: ChaCha8Rng,
}

impl ReplicationStreams {
    pub fn new(base_seed: u64, domain: Domain, replication: u64) -> Self {
        Self {
            env: stream(base_seed, domain, Role::Environment, replication),
            tie_break: stream(base_seed, domain, Role::TieBreak, replication),
        }
    }
}
