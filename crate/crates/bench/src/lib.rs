//! Fixtures for the benchmarks in `benches/`.

use chainid_core::{chain, generate, ProbVector, TransitionMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random reversible chain on `d` states.
pub fn reversible(d: usize, seed: u64) -> TransitionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate::random_reversible(d, 0.4, 0.1, &mut rng)
}

/// Chain with `blocks` blocks of `size` states and weak coupling.
pub fn planted(blocks: usize, size: usize) -> TransitionMatrix {
    generate::block_chain(&vec![size; blocks], 0.002)
}

pub fn stationary(p: &TransitionMatrix) -> ProbVector {
    chain::stationary_distribution(p).expect("irreducible fixture")
}
