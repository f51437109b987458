use serde::{Deserialize, Serialize};

use super::kernel::{kernel_matern52, kernel_matrix, GpParams};
use crate::error::{Error, Result};
use crate::mask::BandMask;

pub const INITIAL_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;

/// One evaluated mask; `y = 1 − test Dice`, lower is better.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub mask: BandMask,
    pub y: f64,
}

impl Observation {
    pub fn new(mask: BandMask, y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFinite(format!("objective {y} for mask {mask}")));
        }
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidArgument(format!("objective {y} for mask {mask} outside [0, 1]")));
        }
        Ok(Self { mask, y })
    }
}

/// Zero-mean GP on standardised targets with a cached Cholesky factor of
/// `K + (noise + jitter)·I`.
#[derive(Clone, Debug)]
pub struct GPModel {
    observations: Vec<Observation>,
    params: GpParams,
    jitter: f64,
    /// Lower-triangular, row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

/// In-place Cholesky of a row-major SPD matrix; `false` if not positive definite.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

/// Solves `L x = b` in place.
fn forward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn backward_sub(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

impl GPModel {
    pub fn fit(observations: &[Observation], params: GpParams) -> Result<Self> {
        params.validate()?;
        let n = observations.len();
        if n == 0 {
            return Err(Error::InvalidArgument("GP fit needs at least one observation".into()));
        }
        let bands = observations[0].mask.len();
        if let Some(o) = observations.iter().find(|o| !o.y.is_finite()) {
            return Err(Error::NonFinite(format!("objective {} for mask {}", o.y, o.mask)));
        }
        if let Some(o) = observations.iter().find(|o| o.mask.len() != bands) {
            return Err(Error::shape("GPModel::fit", format!("{bands}-band masks"), o.mask.len()));
        }

        let (y_mean, y_std) = if params.standardize {
            let mean = observations.iter().map(|o| o.y).sum::<f64>() / n as f64;
            let var = observations.iter().map(|o| (o.y - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            (mean, if sd < 1e-8 { 1.0 } else { sd })
        } else {
            (0.0, 1.0)
        };

        let masks: Vec<BandMask> = observations.iter().map(|o| o.mask.clone()).collect();
        let k = kernel_matrix(&masks, &params)?;
        let mut jitter = INITIAL_JITTER;
        let chol = loop {
            let mut a = k.clone();
            for i in 0..n {
                a[i * n + i] += params.noise_var + jitter;
            }
            if cholesky(&mut a, n) {
                break a;
            }
            if jitter >= MAX_JITTER {
                return Err(Error::LinAlg(format!(
                    "kernel matrix not positive definite with jitter {jitter:e} ({n} observations)"
                )));
            }
            jitter *= 10.0;
            log::debug!("GP Cholesky failed, raising jitter to {jitter:e}");
        };

        let mut alpha: Vec<f64> = observations.iter().map(|o| (o.y - y_mean) / y_std).collect();
        forward_sub(&chol, n, &mut alpha);
        backward_sub(&chol, n, &mut alpha);
        Ok(Self { observations: observations.to_vec(), params, jitter, chol, alpha, y_mean, y_std })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn params(&self) -> &GpParams {
        &self.params
    }

    pub fn bands(&self) -> usize {
        self.observations[0].mask.len()
    }

    /// Jitter that made the factorisation succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `(mean, std)` used to standardise the targets.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_std)
    }

    pub fn best_y(&self) -> f64 {
        self.observations.iter().map(|o| o.y).fold(f64::INFINITY, f64::min)
    }

    /// Posterior mean and variance of the latent objective, in the
    /// original units of `y`.
    pub fn posterior(&self, query: &BandMask) -> Result<(f64, f64)> {
        let n = self.observations.len();
        let mut v = self
            .observations
            .iter()
            .map(|o| kernel_matern52(query, &o.mask, &self.params))
            .collect::<Result<Vec<_>>>()?;
        let mean: f64 = v.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        forward_sub(&self.chol, n, &mut v);
        let var = (self.params.signal_var - v.iter().map(|x| x * x).sum::<f64>()).max(0.0);
        Ok((self.y_mean + self.y_std * mean, self.y_std * self.y_std * var))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(mask: &str, y: f64) -> Observation {
        Observation::new(mask.parse().unwrap(), y).unwrap()
    }

    #[test]
    fn single_observation_shrinks_toward_zero_mean() {
        let p = GpParams { standardize: false, ..GpParams::default() };
        let gp = GPModel::fit(&[obs("0110", 0.8)], p).unwrap();
        let (mu, var) = gp.posterior(&"0110".parse().unwrap()).unwrap();
        let shrink = p.signal_var / (p.signal_var + p.noise_var + gp.jitter());
        assert!((mu - 0.8 * shrink).abs() < 1e-12);
        assert!(var >= 0.0 && var < 2e-4);
        // Standardised: a lone point is its own mean, so the posterior returns it.
        let gp = GPModel::fit(&[obs("0110", 0.8)], GpParams::default()).unwrap();
        assert!((gp.posterior(&"0110".parse().unwrap()).unwrap().0 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn duplicates_fit() {
        let gp = GPModel::fit(&[obs("101", 0.2), obs("101", 0.3), obs("011", 0.5)], GpParams::default()).unwrap();
        let (mu, _) = gp.posterior(&"101".parse().unwrap()).unwrap();
        assert!((mu - 0.25).abs() < 1e-3);
    }

    #[test]
    fn distant_query_recovers_prior() {
        let p = GpParams { length_scale: 1e-3, ..GpParams::default() };
        let data = [obs("1100", 0.1), obs("0011", 0.5), obs("1111", 0.3)];
        let gp = GPModel::fit(&data, p).unwrap();
        let (mean, sd) = gp.standardization();
        let (mu, var) = gp.posterior(&"1000".parse().unwrap()).unwrap();
        assert!((mu - mean).abs() < 1e-12 && (mean - 0.3).abs() < 1e-12);
        assert!((var - sd * sd * p.signal_var).abs() < 1e-12);
    }

    #[test]
    fn observed_point_interpolates_as_noise_vanishes() {
        let p = GpParams { noise_var: 1e-12, ..GpParams::default() };
        let data = [obs("1100", 0.1), obs("0011", 0.5), obs("1010", 0.3)];
        let gp = GPModel::fit(&data, p).unwrap();
        for o in &data {
            let (mu, var) = gp.posterior(&o.mask).unwrap();
            assert!((mu - o.y).abs() < 1e-6, "{mu} vs {}", o.y);
            assert!(var < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GPModel::fit(&[], GpParams::default()).is_err());
        assert!(Observation::new("1".parse().unwrap(), f64::NAN).is_err());
        assert!(Observation::new("1".parse().unwrap(), 1.5).is_err());
        assert!(GPModel::fit(&[obs("10", 0.1), obs("101", 0.2)], GpParams::default()).is_err());
        let bad = GpParams { noise_var: 0.0, ..GpParams::default() };
        assert!(GPModel::fit(&[obs("10", 0.1)], bad).is_err());
    }
}
