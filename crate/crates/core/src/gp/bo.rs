use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::{propose_next, SearchStrategy};
use super::kernel::GpParams;
use super::model::{GPModel, Observation};
use super::trace::TraceRecord;
use crate::error::{Error, Result};
use crate::mask::BandMask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoOptions {
    /// Random masks evaluated before the GP drives the search.
    pub n_warm: usize,
    /// Acquisition-driven evaluations after the warm start.
    pub n_iters: usize,
    pub seed: u64,
    pub gp: GpParams,
    pub search: SearchStrategy,
    /// The loop aborts once more than this fraction of the planned
    /// evaluations has failed.
    pub max_failure_fraction: f64,
}

impl Default for BoOptions {
    fn default() -> Self {
        Self {
            n_warm: 5,
            n_iters: 35,
            seed: 0,
            gp: GpParams::default(),
            search: SearchStrategy::Auto,
            max_failure_fraction: 0.25,
        }
    }
}

impl BoOptions {
    pub fn planned(&self) -> usize {
        self.n_warm + self.n_iters
    }
}

#[derive(Clone, Debug)]
pub struct BoOutcome {
    /// Successful evaluations, best (lowest `y`) first.
    pub ranked: Vec<Observation>,
    /// Every evaluation in order, failures included.
    pub trace: Vec<TraceRecord>,
}

impl BoOutcome {
    pub fn best(&self) -> Option<&Observation> {
        self.ranked.first()
    }

    pub fn failures(&self) -> usize {
        self.trace.iter().filter(|r| r.y.is_none()).count()
    }
}

fn random_mask(rng: &mut ChaCha8Rng, bands: usize) -> BandMask {
    loop {
        let m = BandMask::new((0..bands).map(|_| rng.random_bool(0.5)).collect()).expect("bands >= 1");
        if !m.is_zero() {
            return m;
        }
    }
}

fn domain_size(bands: usize) -> Option<u64> {
    (bands < 64).then(|| (1u64 << bands) - 1)
}

/// Bayesian optimisation of `objective` over nonzero `bands`-bit masks.
///
/// `resume` holds records from an earlier, possibly truncated, run with the
/// same options; they are replayed instead of re-evaluated and must match
/// the masks this run would choose. `on_record` sees each new record as
/// soon as it exists, so a trace file can be appended incrementally.
pub fn bayes_opt_loop<F, R>(
    mut objective: F,
    bands: usize,
    opts: &BoOptions,
    resume: &[TraceRecord],
    mut on_record: R,
) -> Result<BoOutcome>
where
    F: FnMut(&BandMask) -> Result<f64>,
    R: FnMut(&TraceRecord) -> Result<()>,
{
    if bands == 0 {
        return Err(Error::InvalidArgument("bayes_opt_loop needs >= 1 band".into()));
    }
    if opts.n_warm == 0 {
        return Err(Error::InvalidArgument("n_warm must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&opts.max_failure_fraction) {
        return Err(Error::InvalidArgument("max_failure_fraction must lie in [0, 1]".into()));
    }
    opts.gp.validate()?;
    if resume.len() > opts.planned() {
        return Err(Error::Config(format!(
            "resume trace has {} records but only {} evaluations are planned",
            resume.len(),
            opts.planned()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut seen: HashSet<BandMask> = HashSet::new();
    let mut observations: Vec<Observation> = Vec::new();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let max_failures = (opts.max_failure_fraction * opts.planned() as f64).floor() as usize;
    let domain = domain_size(bands);

    for iter in 0..opts.planned() {
        if domain.is_some_and(|d| seen.len() as u64 >= d) {
            log::info!("all {} masks evaluated after {iter} evaluations", seen.len());
            break;
        }
        let mask = if iter < opts.n_warm || observations.is_empty() {
            loop {
                let m = random_mask(&mut rng, bands);
                if !seen.contains(&m) {
                    break m;
                }
            }
        } else {
            let gp = GPModel::fit(&observations, opts.gp)?;
            let seed = opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(iter as u64);
            match propose_next(&gp, &seen, opts.search, seed) {
                Ok(m) => m,
                Err(Error::DomainExhausted) => break,
                Err(e) => return Err(e),
            }
        };

        let record = if let Some(prev) = resume.get(iter) {
            if prev.iter != iter || prev.mask != mask {
                return Err(Error::Config(format!(
                    "resume trace diverges at evaluation {iter}: recorded {} {}, this run chose {mask}",
                    prev.iter, prev.mask
                )));
            }
            prev.clone()
        } else {
            let start = Instant::now();
            let y = match objective(&mask) {
                Ok(y) if y.is_finite() && (0.0..=1.0).contains(&y) => Some(y),
                Ok(y) => {
                    log::warn!("objective for {mask} returned {y}; counted as a failure");
                    None
                }
                Err(e) => {
                    log::warn!("objective for {mask} failed: {e}");
                    None
                }
            };
            let record = TraceRecord { iter, mask: mask.clone(), y, seconds: start.elapsed().as_secs_f64() };
            on_record(&record)?;
            record
        };

        match record.y {
            Some(y) => {
                log::info!("bo eval {iter}: {mask} y={y:.5}");
                observations.push(Observation::new(mask.clone(), y)?);
            }
            None => log::info!("bo eval {iter}: {mask} failed"),
        }
        seen.insert(mask);
        trace.push(record);

        let failed = trace.iter().filter(|r| r.y.is_none()).count();
        if failed > max_failures {
            return Err(Error::TooManyFailures { failed, planned: opts.planned() });
        }
    }

    let mut ranked = observations;
    ranked.sort_by(|a, b| a.y.total_cmp(&b.y).then_with(|| a.mask.cmp(&b.mask)));
    Ok(BoOutcome { ranked, trace })
}
