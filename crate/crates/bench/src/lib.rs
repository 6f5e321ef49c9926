//! Fixtures shared by the benchmarks.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlattice::cda::golden_generator;
use stlattice::slast::SlastCode;
use stlattice::tcm::{build_partition_perfect, CosetSelector, TcmScheme};
use stlattice::catalog;

/// Uniform targets in `[-4, 4)^dim`.
pub fn targets(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-4.0..4.0)))
        .collect()
}

/// The 4 bpcu Golden code over `Z^8` with `Q = 2`.
pub fn golden_code() -> SlastCode {
    SlastCode::build(&golden_generator(), &catalog("Zn(8)").unwrap(), 2, 1)
        .unwrap()
        .with_moment_samples(20_000, 1)
}

/// The 16-state trellis scheme on the Golden-Gosset chain.
pub fn trellis(blocks: usize) -> TcmScheme {
    let p = build_partition_perfect(2).unwrap();
    let sel = CosetSelector::default_16state(&p).unwrap();
    TcmScheme::new(p, sel, blocks, true).unwrap().with_moment_samples(20_000)
}
