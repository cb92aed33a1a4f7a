//! Seeded random streams.
//!
//! Every task draws from its own ChaCha8 stream: the key comes from the
//! master seed and the stream id from the task index, so results do not
//! depend on the order in which tasks run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

pub const ALGORITHM: &str = "chacha8/stream-per-task";

/// Generator for task `stream` under `master_seed`.
pub fn stream(master_seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a task identified by up to four indices.
pub fn task_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &p| {
        let mut x = h ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    })
}

/// Serializable position of a stream, enough to resume it exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(seed: u64, rng: &Rng) -> Self {
        RngState {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> Rng {
        let mut rng = stream(self.seed, self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn capture_restore_continues_stream() {
        let mut a = stream(7, 3);
        for _ in 0..17 {
            a.random::<u64>();
        }
        let state = RngState::capture(7, &a);
        let mut b = state.restore();
        for _ in 0..50 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = stream(1, 0);
        let mut b = stream(1, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
        assert_ne!(task_id(&[1, 2]), task_id(&[2, 1]));
    }
}
