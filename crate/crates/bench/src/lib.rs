//! Input builders shared by the benchmarks.

use bandsel_core::gp::Observation;
use bandsel_core::{BandMask, Shape4, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_tensor(shape: Shape4, seed: u64) -> Tensor4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.len()).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Tensor4::from_vec(shape, data).expect("length matches shape")
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-0.5f32..0.5)).collect()
}

/// `n` distinct nonzero masks over `bands` bands with uniform objective values.
pub fn random_observations(n: usize, bands: usize, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let code = rng.random_range(1..1u64 << bands);
        if seen.insert(code) {
            out.push(Observation::new(BandMask::from_code(bands, code), rng.random_range(0.0..1.0)).unwrap());
        }
    }
    out
}
