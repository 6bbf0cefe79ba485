//! Deterministic named substreams.
//!
//! Every episode owns a single root seed. Components (instance generation,
//! initial state, environment, each learner) draw from their own stream,
//! derived by hashing the root seed together with a stream name, so the
//! order in which components run never changes what any of them sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub const INSTANCE: &str = "instance";
pub const INITIAL_STATE: &str = "initial-state";
pub const ENVIRONMENT: &str = "environment";

pub fn substream(root: u64, name: &str) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

pub fn learner_stream(root: u64, learner_id: &str) -> Stream {
    substream(root, &format!("learner/{learner_id}"))
}
