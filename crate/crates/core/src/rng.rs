//! Seeded random streams.
//!
//! Every sampler takes an explicit `u64` seed. Parallel work is split into
//! fixed-size shards, and shard `i` draws from ChaCha stream `i` of the
//! master seed. Results therefore do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Draws per shard in sharded Monte Carlo loops.
pub const SHARD_SIZE: usize = 4096;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn shard_rng(seed: u64, shard: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Splits `total` into `(shard_index, len)` pairs of at most [`SHARD_SIZE`].
pub fn shards(total: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..total.div_ceil(SHARD_SIZE)).map(move |i| {
        let start = i * SHARD_SIZE;
        (i as u64, SHARD_SIZE.min(total - start))
    })
}

/// A fresh seed from OS entropy, for callers that did not pin one.
pub fn entropy_seed() -> u64 {
    rand::random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shards_cover_total() {
        let v: Vec<_> = shards(10_000).collect();
        assert_eq!(v.iter().map(|s| s.1).sum::<usize>(), 10_000);
        assert_eq!(v.len(), 3);
        assert_eq!(shards(0).count(), 0);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = shard_rng(7, 0).random();
        let b: u64 = shard_rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, shard_rng(7, 0).random::<u64>());
    }
}
