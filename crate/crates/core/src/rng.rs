//! Seedable counter-based random streams.
//!
//! Every simulated path draws from its own ChaCha8 stream selected by
//! `(seed, stream id)`, so results do not depend on thread count or on the
//! order in which paths are produced.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Disjoint ranges of stream ids for the different consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Training,
    Fresh,
    Oracle,
    Scratch,
}

impl StreamKind {
    fn offset(self) -> u64 {
        match self {
            StreamKind::Training => 0,
            StreamKind::Fresh => 1 << 40,
            StreamKind::Oracle => 2 << 40,
            StreamKind::Scratch => 3 << 40,
        }
    }
}

/// Independent stream number `index` of kind `kind` under `seed`.
pub fn path_stream(seed: u64, kind: StreamKind, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.offset() + index);
    rng
}
