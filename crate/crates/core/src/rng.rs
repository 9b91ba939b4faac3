//! Named random substreams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded by
//! mixing a master seed with a path of labels, e.g. `(seed, TREE, j)`.
//! Results therefore depend only on the master seed and the position of the
//! computation, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels. Each derivation site uses a distinct tag.
pub mod tag {
    pub const TREE: u64 = 0x7472_6565;
    pub const FOREST: u64 = 0x666f_7273;
    pub const IMPUTE: u64 = 0x696d_7075;
    pub const GENERATE: u64 = 0x6765_6e65;
    pub const ORACLE: u64 = 0x6f72_6163;
    pub const FOLDS: u64 = 0x666f_6c64;
    pub const REPLICATION: u64 = 0x7265_706c;
    pub const TRAIN: u64 = 0x7472_6169;
    pub const TEST: u64 = 0x7465_7374;
    pub const RIST: u64 = 0x7269_7374;
    pub const CALIBRATE: u64 = 0x6361_6c69;
    pub const PROBE: u64 = 0x7072_6f62;
    pub const EVAL: u64 = 0x6576_616c;
    pub const CORPUS: u64 = 0x636f_7270;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a label path.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

pub fn substream(seed: u64, labels: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(seed, labels))
}
