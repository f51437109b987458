use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::GPModel;
use crate::error::{Error, Result};
use crate::mask::BandMask;

/// `erf` by Abramowitz & Stegun 7.1.26, absolute error below 1.5e-7.
pub fn erf(x: f64) -> f64 {
    const P: f64 = 0.327_591_1;
    const A: [f64; 5] = [0.254_829_592, -0.284_496_736, 1.421_413_741, -1.453_152_027, 1.061_405_429];
    let t = 1.0 / (1.0 + P * x.abs());
    let poly = t * (A[0] + t * (A[1] + t * (A[2] + t * (A[3] + t * A[4]))));
    let y = 1.0 - poly * (-x * x).exp();
    if x < 0.0 {
        -y
    } else {
        y
    }
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `f_best` of a `N(mu, sigma²)` objective.
pub fn ei_closed_form(mu: f64, sigma: f64, f_best: f64) -> f64 {
    let gain = f_best - mu;
    if sigma <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    (gain * norm_cdf(z) + sigma * norm_pdf(z)).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Sample-mean estimate of expected improvement with its standard error.
pub fn ei_monte_carlo(mu: f64, sigma: f64, f_best: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("ei_monte_carlo needs n_samples >= 1".into()));
    }
    if sigma <= 0.0 {
        return Ok(McEstimate { mean: (f_best - mu).max(0.0), std_err: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let z: f64 = StandardNormal.sample(&mut rng);
        let gain = (f_best - (mu + sigma * z)).max(0.0);
        sum += gain;
        sum_sq += gain * gain;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(McEstimate { mean, std_err: (var / n).sqrt() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Exhaustive up to [`EXHAUSTIVE_MAX_BANDS`] bands, hill climbing beyond.
    #[default]
    Auto,
    Exhaustive,
    HillClimb,
}

pub const EXHAUSTIVE_MAX_BANDS: usize = 16;
pub const HILL_CLIMB_RESTARTS: usize = 16;

/// EI of `mask` under `model`, with `f_best` the lowest observed objective.
pub fn expected_improvement(model: &GPModel, mask: &BandMask, f_best: f64) -> Result<f64> {
    let (mu, var) = model.posterior(mask)?;
    Ok(ei_closed_form(mu, var.sqrt(), f_best))
}

/// Nonzero masks of length `bands` in lexicographic order.
pub fn enumerate_masks(bands: usize) -> impl Iterator<Item = BandMask> {
    assert!(bands < 64, "cannot enumerate {bands}-band masks");
    (1u64..1u64 << bands).map(move |code| {
        let bits = (0..bands).map(|i| (code >> (bands - 1 - i)) & 1 == 1).collect();
        BandMask::new(bits).expect("nonempty")
    })
}

/// Larger EI wins; equal EI goes to the lexicographically smaller mask.
fn better(cand: (f64, &BandMask), best: &Option<(f64, BandMask)>) -> bool {
    match best {
        None => true,
        Some((e, m)) => cand.0 > *e || (cand.0 == *e && cand.1 < m),
    }
}

/// Unobserved nonzero mask maximising expected improvement.
pub fn propose_next(
    model: &GPModel,
    excluded: &HashSet<BandMask>,
    strategy: SearchStrategy,
    seed: u64,
) -> Result<BandMask> {
    let bands = model.bands();
    let exhaustive = match strategy {
        SearchStrategy::Auto => bands <= EXHAUSTIVE_MAX_BANDS,
        SearchStrategy::Exhaustive => true,
        SearchStrategy::HillClimb => false,
    };
    let f_best = model.best_y();
    if exhaustive {
        if bands >= 64 {
            return Err(Error::InvalidArgument(format!("exhaustive search over {bands} bands")));
        }
        let mut best: Option<(f64, BandMask)> = None;
        for m in enumerate_masks(bands) {
            if excluded.contains(&m) {
                continue;
            }
            let ei = expected_improvement(model, &m, f_best)?;
            if better((ei, &m), &best) {
                best = Some((ei, m));
            }
        }
        return best.map(|(_, m)| m).ok_or(Error::DomainExhausted);
    }
    hill_climb(model, excluded, f_best, seed)
}

/// Greedy single-bit-flip ascent on EI from seeded random starts. Observed
/// masks may be walked through but are never returned.
fn hill_climb(model: &GPModel, excluded: &HashSet<BandMask>, f_best: f64, seed: u64) -> Result<BandMask> {
    let bands = model.bands();
    if bands < 64 && excluded.iter().filter(|m| !m.is_zero()).count() as u64 >= (1u64 << bands) - 1 {
        return Err(Error::DomainExhausted);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, BandMask)> = None;
    let consider = |ei: f64, m: &BandMask, best: &mut Option<(f64, BandMask)>| {
        if !excluded.contains(m) && better((ei, m), best) {
            *best = Some((ei, m.clone()));
        }
    };
    for _ in 0..HILL_CLIMB_RESTARTS {
        let mut cur = loop {
            let m = BandMask::new((0..bands).map(|_| rng.random_bool(0.5)).collect())?;
            if !m.is_zero() {
                break m;
            }
        };
        let mut cur_ei = expected_improvement(model, &cur, f_best)?;
        consider(cur_ei, &cur, &mut best);
        loop {
            let mut step: Option<(f64, BandMask)> = None;
            for b in 0..bands {
                let n = cur.flipped(b);
                if n.is_zero() {
                    continue;
                }
                let ei = expected_improvement(model, &n, f_best)?;
                consider(ei, &n, &mut best);
                if ei > cur_ei && better((ei, &n), &step) {
                    step = Some((ei, n));
                }
            }
            match step {
                Some((ei, n)) => {
                    cur = n;
                    cur_ei = ei;
                }
                None => break,
            }
        }
    }
    if let Some((_, m)) = best {
        return Ok(m);
    }
    // Every mask the climbs touched was observed; fall back to random draws.
    for _ in 0..10_000 {
        let m = BandMask::new((0..bands).map(|_| rng.random_bool(0.5)).collect())?;
        if !m.is_zero() && !excluded.contains(&m) {
            return Ok(m);
        }
    }
    Err(Error::DomainExhausted)
}
