use std::collections::HashSet;

use bandsel_core::gp::{
    bayes_opt_loop, ei_closed_form, ei_monte_carlo, enumerate_masks, kernel_matrix, propose_next, BoOptions, GPModel,
    GpParams, SearchStrategy,
};
use bandsel_core::BandMask;
use common::{dense_posterior, oracle_ei, random_mask, random_obs};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

#[test]
fn posterior_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let p = GpParams::default();
    for case in 0..50 {
        let d = rng.random_range(2..=12);
        let n = rng.random_range(1..=30);
        let obs = random_obs(&mut rng, n, d);
        let gp = GPModel::fit(&obs, p).unwrap();
        for _ in 0..5 {
            let q = random_mask(&mut rng, d);
            let (mu, var) = gp.posterior(&q).unwrap();
            let (omu, ovar) = dense_posterior(&obs, &p, gp.jitter(), &q);
            assert!((mu - omu).abs() < 1e-8, "case {case}: mean {mu} vs {omu}");
            assert!((var - ovar).abs() < 1e-8, "case {case}: var {var} vs {ovar}");
        }
    }
}

#[test]
fn exhaustive_proposal_is_a_global_maximiser() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let p = GpParams::default();
    for case in 0..20 {
        let n = rng.random_range(1..=15);
        let obs = random_obs(&mut rng, n, 8);
        let gp = GPModel::fit(&obs, p).unwrap();
        let excluded: HashSet<BandMask> = obs.iter().map(|o| o.mask.clone()).collect();
        let got = propose_next(&gp, &excluded, SearchStrategy::Exhaustive, case).unwrap();
        assert!(!excluded.contains(&got) && !got.is_zero());
        let f_best = obs.iter().map(|o| o.y).fold(f64::INFINITY, f64::min);
        let score = |m: &BandMask| {
            let (mu, var) = dense_posterior(&obs, &p, gp.jitter(), m);
            oracle_ei(mu, var.sqrt(), f_best)
        };
        let mut best = f64::NEG_INFINITY;
        for code in 1u64..256 {
            let m = BandMask::from_code(8, code);
            if !excluded.contains(&m) {
                best = best.max(score(&m));
            }
        }
        assert!(score(&got) >= best - 1e-9 * (1.0 + best.abs()), "case {case}");
    }
}

#[test]
fn hill_climb_agrees_with_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    for trial in 0..20 {
        let obs = random_obs(&mut rng, 10, 8);
        let gp = GPModel::fit(&obs, GpParams::default()).unwrap();
        let excluded: HashSet<BandMask> = obs.iter().map(|o| o.mask.clone()).collect();
        let ex = propose_next(&gp, &excluded, SearchStrategy::Exhaustive, trial).unwrap();
        let hc = propose_next(&gp, &excluded, SearchStrategy::HillClimb, trial).unwrap();
        agree += (ex == hc) as usize;
    }
    assert!(agree >= 18, "{agree}/20");
}

#[test]
fn kernel_matrix_is_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let d = rng.random_range(1..=12);
        let n = rng.random_range(1..=30);
        let masks: Vec<BandMask> = (0..n).map(|_| random_mask(&mut rng, d)).collect();
        let k = kernel_matrix(&masks, &GpParams::default()).unwrap();
        let m = DMatrix::from_row_slice(n, n, &k);
        assert_eq!(m, m.transpose());
        let min = m.symmetric_eigen().eigenvalues.min();
        assert!(min >= -1e-8, "min eigenvalue {min}");
    }
}

#[test]
fn monte_carlo_error_shrinks_with_samples() {
    let (mu, sigma, f_best) = (0.3, 0.15, 0.32);
    let closed = ei_closed_form(mu, sigma, f_best);
    let rms = |n: usize| {
        let s: f64 =
            (0..40u64).map(|seed| (ei_monte_carlo(mu, sigma, f_best, n, seed).unwrap().mean - closed).powi(2)).sum();
        (s / 40.0).sqrt()
    };
    let ratio = rms(16_000) / rms(1000);
    assert!((0.12..0.45).contains(&ratio), "16x samples changed the error by {ratio}");
    let a = ei_monte_carlo(mu, sigma, f_best, 10_000, 1).unwrap();
    let b = ei_monte_carlo(mu, sigma, f_best, 40_000, 1).unwrap();
    assert!((b.std_err / a.std_err - 0.5).abs() < 0.05);
}

#[test]
fn toy_popcount_objective_is_solved_quickly() {
    let mut solved = 0;
    for seed in 0..10 {
        let opts = BoOptions { n_warm: 5, n_iters: 10, seed, ..BoOptions::default() };
        let out = bayes_opt_loop(|m: &BandMask| Ok((m.popcount() as f64 - 3.0).abs() / 8.0), 8, &opts, &[], |_| Ok(()))
            .unwrap();
        solved += (out.best().unwrap().y == 0.0) as usize;
        let mut run_min = f64::INFINITY;
        for r in &out.trace {
            let next = run_min.min(r.y.unwrap());
            assert!(next <= run_min);
            run_min = next;
        }
    }
    assert!(solved >= 9, "{solved}/10");
}

#[test]
fn enumeration_covers_domain() {
    let all: HashSet<BandMask> = enumerate_masks(6).collect();
    assert_eq!(all.len(), 63);
    assert!(!all.contains(&BandMask::from_code(6, 0)));
}

proptest! {
    #[test]
    fn ei_nonnegative_and_increasing_in_sigma(mu in -2.0f64..2.0, gap in 1e-3f64..2.0, u in 0.25f64..2.0) {
        // Start with z = gap / sigma <= 4; far beyond that both terms round to constants.
        let (f_best, s0) = (mu + gap, gap * u);
        let mut prev = ei_closed_form(mu, s0, f_best);
        prop_assert!(prev >= 0.0);
        for k in 1..20 {
            let e = ei_closed_form(mu, s0 + 0.1 * k as f64, f_best);
            prop_assert!(e > prev, "sigma step {k}: {e} <= {prev}");
            prev = e;
        }
    }

    #[test]
    fn ei_is_never_negative(mu in -3.0f64..3.0, sigma in 0.0f64..3.0, f_best in -3.0f64..3.0) {
        prop_assert!(ei_closed_form(mu, sigma, f_best) >= 0.0);
    }

    #[test]
    fn proposals_avoid_observed_and_zero(seed: u64, n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = random_obs(&mut rng, n, 5);
        let gp = GPModel::fit(&obs, GpParams::default()).unwrap();
        let excluded: HashSet<BandMask> = obs.iter().map(|o| o.mask.clone()).collect();
        for s in [SearchStrategy::Exhaustive, SearchStrategy::HillClimb] {
            let m = propose_next(&gp, &excluded, s, seed).unwrap();
            prop_assert!(!m.is_zero() && !excluded.contains(&m));
        }
    }
}
