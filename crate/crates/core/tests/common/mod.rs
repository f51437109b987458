//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use bandsel_core::gp::{GpParams, Observation};
use bandsel_core::BandMask;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

pub fn random_mask(rng: &mut ChaCha8Rng, d: usize) -> BandMask {
    loop {
        let m = BandMask::new((0..d).map(|_| rng.random_bool(0.5)).collect()).unwrap();
        if !m.is_zero() {
            return m;
        }
    }
}

pub fn random_obs(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Observation> {
    (0..n).map(|_| Observation::new(random_mask(rng, d), rng.random_range(0.0..1.0)).unwrap()).collect()
}

/// Straight-line Matérn 5/2 on normalised Hamming distance.
pub fn oracle_kernel(a: &BandMask, b: &BandMask, p: &GpParams) -> f64 {
    let h = a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count() as f64;
    let r = (h / a.len() as f64).sqrt() / p.length_scale;
    p.signal_var * (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp()
}

/// Posterior via an explicit inverse of `K + (noise + jitter)·I`.
pub fn dense_posterior(obs: &[Observation], p: &GpParams, jitter: f64, q: &BandMask) -> (f64, f64) {
    let n = obs.len();
    let ys: Vec<f64> = obs.iter().map(|o| o.y).collect();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sd = if sd < 1e-8 { 1.0 } else { sd };
    let k = DMatrix::from_fn(n, n, |i, j| {
        oracle_kernel(&obs[i].mask, &obs[j].mask, p) + if i == j { p.noise_var + jitter } else { 0.0 }
    });
    let inv = k.try_inverse().expect("invertible");
    let y = DVector::from_iterator(n, ys.iter().map(|v| (v - mean) / sd));
    let ks = DVector::from_iterator(n, obs.iter().map(|o| oracle_kernel(q, &o.mask, p)));
    let mu = (ks.transpose() * &inv * y)[(0, 0)];
    let var = p.signal_var - (ks.transpose() * &inv * &ks)[(0, 0)];
    (mean + sd * mu, sd * sd * var.max(0.0))
}

pub fn oracle_ei(mu: f64, sigma: f64, f_best: f64) -> f64 {
    if sigma <= 0.0 {
        return (f_best - mu).max(0.0);
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let z = (f_best - mu) / sigma;
    (f_best - mu) * n.cdf(z) + sigma * n.pdf(z)
}
