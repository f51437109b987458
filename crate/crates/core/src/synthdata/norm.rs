use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};
use crate::mask::BandMask;

pub const STD_FLOOR: f32 = 1e-6;

/// Per-band mean and standard deviation of the training pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

impl NormStats {
    pub fn identity(bands: usize) -> Self {
        Self { mean: vec![0.0; bands], std: vec![1.0; bands] }
    }

    pub fn bands(&self) -> usize {
        self.mean.len()
    }

    pub fn select(&self, mask: &BandMask) -> Result<Self> {
        if mask.len() != self.bands() {
            return Err(Error::shape("NormStats::select", self.bands(), mask.len()));
        }
        let idx = mask.indices();
        Ok(Self { mean: idx.iter().map(|&i| self.mean[i]).collect(), std: idx.iter().map(|&i| self.std[i]).collect() })
    }
}

/// Two-pass mean/variance over every pixel of every training raster,
/// accumulated in f64.
pub fn compute_norm_stats(train: &[Raster]) -> Result<NormStats> {
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("normalisation needs at least one training raster".into()))?;
    let d = first.bands();
    if let Some(r) = train.iter().find(|r| r.bands() != d) {
        return Err(Error::shape("compute_norm_stats", format!("{d} bands"), r.bands()));
    }
    let count: usize = train.iter().map(Raster::pixels).sum();
    let mut sum = vec![0.0f64; d];
    for r in train {
        for px in r.data().chunks_exact(d) {
            for (s, &v) in sum.iter_mut().zip(px) {
                *s += v as f64;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0f64; d];
    for r in train {
        for px in r.data().chunks_exact(d) {
            for ((s, &v), m) in sq.iter_mut().zip(px).zip(&mean) {
                let dv = v as f64 - m;
                *s += dv * dv;
            }
        }
    }
    Ok(NormStats {
        mean: mean.iter().map(|&m| m as f32).collect(),
        std: sq.iter().map(|s| ((s / count as f64).sqrt() as f32).max(STD_FLOOR)).collect(),
    })
}

/// `(x − μ_b) / σ_b` per band.
pub fn apply_norm(raster: &Raster, stats: &NormStats) -> Result<Raster> {
    if stats.bands() != raster.bands() {
        return Err(Error::shape("apply_norm", format!("{} bands", stats.bands()), raster.bands()));
    }
    Ok(raster.map_values(|b, v| (v - stats.mean[b]) / stats.std[b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::{generate_scene, SceneSpec};

    #[test]
    fn constant_band_uses_floor() {
        let r = Raster::new(2, 2, 1, vec![5.0; 4], None).unwrap();
        let s = compute_norm_stats(&[r.clone()]).unwrap();
        assert_eq!(s.mean, vec![5.0]);
        assert_eq!(s.std, vec![STD_FLOOR]);
        assert!(apply_norm(&r, &s).unwrap().data().iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn normalized_training_set_is_standard() {
        let train: Vec<Raster> = (0..3).map(|i| generate_scene(&SceneSpec::default().with_seed(i)).unwrap()).collect();
        let stats = compute_norm_stats(&train).unwrap();
        let normed: Vec<Raster> = train.iter().map(|r| apply_norm(r, &stats).unwrap()).collect();
        let again = compute_norm_stats(&normed).unwrap();
        for b in 0..stats.bands() {
            assert!(again.mean[b].abs() < 1e-4, "mean {}", again.mean[b]);
            assert!((again.std[b] - 1.0).abs() < 1e-3, "std {}", again.std[b]);
        }
    }

    #[test]
    fn apply_is_affine_per_band() {
        // f(x) = a·x + c per band, so f at a midpoint is the midpoint of f.
        let stats = NormStats { mean: vec![1.5, -2.0], std: vec![0.5, 4.0] };
        let r1 = Raster::new(1, 2, 2, vec![0.0, 1.0, 2.0, -3.0], None).unwrap();
        let r2 = Raster::new(1, 2, 2, vec![4.0, -1.0, 0.5, 7.0], None).unwrap();
        let mid =
            Raster::new(1, 2, 2, r1.data().iter().zip(r2.data()).map(|(a, b)| 0.5 * (a + b)).collect(), None).unwrap();
        let (n1, n2, nm) =
            (apply_norm(&r1, &stats).unwrap(), apply_norm(&r2, &stats).unwrap(), apply_norm(&mid, &stats).unwrap());
        for i in 0..4 {
            assert!((nm.data()[i] - 0.5 * (n1.data()[i] + n2.data()[i])).abs() < 1e-6);
        }
        // Applied twice differs from once for non-identity stats.
        assert_ne!(apply_norm(&n1, &stats).unwrap(), n1);
        assert_eq!(apply_norm(&r1, &NormStats::identity(2)).unwrap(), r1);
    }
}
