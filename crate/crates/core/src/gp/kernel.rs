use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BandMask;

/// Fixed GP hyper-parameters. Distances are Hamming distances divided by
/// the mask length, so `r` lies in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpParams {
    pub length_scale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
    /// Standardise targets before fitting. Off only for algebra checks.
    pub standardize: bool,
}

impl Default for GpParams {
    fn default() -> Self {
        Self { length_scale: 1.0, signal_var: 1.0, noise_var: 1e-4, standardize: true }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.length_scale) || !ok(self.signal_var) || !ok(self.noise_var) {
            return Err(Error::InvalidArgument(format!(
                "GP length_scale, signal_var and noise_var must be finite and > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Matérn 5/2 as a function of distance.
pub fn matern52(r: f64, length_scale: f64, signal_var: f64) -> f64 {
    let s = 5f64.sqrt() * r / length_scale;
    signal_var * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Normalised distance between masks: `sqrt(hamming / D)`.
pub fn mask_distance(a: &BandMask, b: &BandMask) -> Result<f64> {
    Ok((a.hamming(b)? as f64 / a.len() as f64).sqrt())
}

pub fn kernel_matern52(a: &BandMask, b: &BandMask, params: &GpParams) -> Result<f64> {
    Ok(matern52(mask_distance(a, b)?, params.length_scale, params.signal_var))
}

/// Dense row-major Gram matrix of `masks`.
pub fn kernel_matrix(masks: &[BandMask], params: &GpParams) -> Result<Vec<f64>> {
    let n = masks.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_matern52(&masks[i], &masks[j], params)?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ratio_value() {
        // (1 + √5 + 5/3)·e^{-√5}, evaluated independently.
        let expected = (1.0 + 5f64.sqrt() + 5.0 / 3.0) * (-(5f64.sqrt())).exp();
        assert!((matern52(1.0, 1.0, 1.0) - expected).abs() < 1e-15);
        assert!((matern52(0.7, 0.7, 2.5) - 2.5 * expected).abs() < 1e-14);
        // 30-digit evaluation of the same expression.
        assert!((matern52(1.0, 1.0, 1.0) - 0.523_994_108_831_820_3).abs() < 1e-15);
    }

    #[test]
    fn identical_masks_give_signal_variance() {
        let p = GpParams { signal_var: 3.0, ..GpParams::default() };
        let m: BandMask = "0110".parse().unwrap();
        assert_eq!(kernel_matern52(&m, &m, &p).unwrap(), 3.0);
        let other: BandMask = "011".parse().unwrap();
        assert!(kernel_matern52(&m, &other, &p).is_err());
    }

    #[test]
    fn distance_uses_normalised_hamming() {
        let a: BandMask = "1100".parse().unwrap();
        let b: BandMask = "0000".parse().unwrap();
        assert!((mask_distance(&a, &b).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
