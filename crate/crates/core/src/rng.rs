//! Per-path random streams.
//!
//! Every simulated path owns a ChaCha8 stream keyed by `(seed, path_index)`,
//! so results do not depend on how paths are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

pub fn path_rng(seed: u64, path_index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Uniform draw on the open interval `(0, 1)`.
pub fn open_unit(rng: &mut PathRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
