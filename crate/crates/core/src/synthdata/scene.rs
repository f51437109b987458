//! Synthetic multi-spectral scenes with a known set of informative bands.
//!
//! The target mask is a union of random ellipses. Every band carries its own
//! independent "distractor" texture made of the same kind of ellipses, plus
//! white noise. Informative bands additionally carry `alpha_b · mask`, so a
//! single informative band cannot separate target from distractor blobs but a
//! combination of informative bands can.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub informative: Vec<usize>,
    pub noise_sigma: f32,
    /// Ellipses in the target mask.
    pub n_blobs: usize,
    /// Ellipses in each band's distractor texture.
    pub n_distractor_blobs: usize,
    /// Distractor blob amplitude; 0 disables the texture entirely.
    pub texture_amplitude: f32,
    /// Range of the per-band signal gain `alpha_b`.
    pub alpha_range: (f32, f32),
    /// Ellipse semi-axis range in pixels.
    pub blob_radius: (f32, f32),
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            bands: 8,
            informative: vec![1, 4, 6],
            noise_sigma: 0.4,
            n_blobs: 14,
            n_distractor_blobs: 10,
            texture_amplitude: 0.8,
            alpha_range: (0.8, 1.2),
            blob_radius: (4.0, 10.0),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return Err(Error::InvalidArgument("scene dims must be >= 1".into()));
        }
        if self.informative.is_empty() {
            return Err(Error::InvalidArgument("scene needs at least one informative band".into()));
        }
        if let Some(&b) = self.informative.iter().find(|&&b| b >= self.bands) {
            return Err(Error::InvalidArgument(format!("informative band {b} out of range for {} bands", self.bands)));
        }
        if !(self.noise_sigma >= 0.0) || !(self.texture_amplitude >= 0.0) {
            return Err(Error::InvalidArgument("noise_sigma and texture_amplitude must be >= 0".into()));
        }
        let (lo, hi) = self.alpha_range;
        let (rlo, rhi) = self.blob_radius;
        if !(lo <= hi) || !(rlo > 0.0 && rlo <= rhi) {
            return Err(Error::InvalidArgument("alpha_range and blob_radius must be ordered, radius > 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn is_informative(&self, band: usize) -> bool {
        self.informative.contains(&band)
    }
}

#[derive(Clone, Copy, Debug)]
struct Ellipse {
    cy: f32,
    cx: f32,
    a: f32,
    b: f32,
    cos: f32,
    sin: f32,
}

impl Ellipse {
    fn random(rng: &mut ChaCha8Rng, spec: &SceneSpec) -> Self {
        let (rlo, rhi) = spec.blob_radius;
        let theta: f32 = rng.random_range(0.0..std::f32::consts::PI);
        Self {
            cy: rng.random_range(0.0..spec.height as f32),
            cx: rng.random_range(0.0..spec.width as f32),
            a: uniform(rng, rlo, rhi),
            b: uniform(rng, rlo, rhi),
            cos: theta.cos(),
            sin: theta.sin(),
        }
    }

    fn contains(&self, y: usize, x: usize) -> bool {
        let dy = y as f32 + 0.5 - self.cy;
        let dx = x as f32 + 0.5 - self.cx;
        let u = (dx * self.cos + dy * self.sin) / self.a;
        let v = (-dx * self.sin + dy * self.cos) / self.b;
        u * u + v * v <= 1.0
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f32, hi: f32) -> f32 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Raster> {
    spec.validate()?;
    let (h, w, d) = (spec.height, spec.width, spec.bands);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let blobs: Vec<Ellipse> = (0..spec.n_blobs).map(|_| Ellipse::random(&mut rng, spec)).collect();
    let mut mask = vec![0u8; h * w];
    for y in 0..h {
        for x in 0..w {
            if blobs.iter().any(|e| e.contains(y, x)) {
                mask[y * w + x] = 1;
            }
        }
    }

    let noise = Normal::new(0.0f32, spec.noise_sigma.max(0.0)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut data = vec![0.0f32; h * w * d];
    for band in 0..d {
        let alpha =
            if spec.is_informative(band) { uniform(&mut rng, spec.alpha_range.0, spec.alpha_range.1) } else { 0.0 };
        let texture: Vec<(Ellipse, f32)> = (0..spec.n_distractor_blobs)
            .map(|_| {
                let e = Ellipse::random(&mut rng, spec);
                let amp = spec.texture_amplitude * uniform(&mut rng, 0.75, 1.25);
                (e, amp)
            })
            .collect();
        for y in 0..h {
            for x in 0..w {
                let mut v = alpha * mask[y * w + x] as f32;
                if spec.texture_amplitude > 0.0 {
                    for (e, amp) in &texture {
                        if e.contains(y, x) {
                            v += amp;
                        }
                    }
                }
                if spec.noise_sigma > 0.0 {
                    v += noise.sample(&mut rng);
                }
                data[(y * w + x) * d + band] = v;
            }
        }
    }
    Raster::new(h, w, d, data, Some(mask))
}
