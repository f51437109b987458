use serde::{Deserialize, Serialize};

use super::io::{load_raster, read_manifest, Role};
use super::{apply_norm, compute_norm_stats, generate_scene, tile_mask, tile_raster, NormStats, Raster, SceneSpec};
use crate::error::{Error, Result};
use crate::mask::BandMask;
use crate::tensor::{Shape4, Tensor4};

/// Normalised training tiles plus raw test rasters.
///
/// Training tiles hold all `D` bands; band subsets are taken per run with
/// [`RasterDataset::train_inputs`]. Statistics come from the training rasters only.
#[derive(Clone, Debug)]
pub struct RasterDataset {
    train_tiles: Tensor4,
    train_masks: Tensor4,
    test: Vec<Raster>,
    stats: NormStats,
    tile_size: usize,
}

impl RasterDataset {
    pub fn from_rasters(train: &[Raster], test: Vec<Raster>, tile_size: usize) -> Result<Self> {
        let stats = compute_norm_stats(train)?;
        let bands = stats.bands();
        let mut tiles = Vec::new();
        let mut masks = Vec::new();
        for r in train {
            if r.mask().is_none() {
                return Err(Error::InvalidArgument("training rasters need target masks".into()));
            }
            let normed = apply_norm(r, &stats)?;
            tiles.push(tile_raster(&normed, tile_size)?.0);
            masks.push(tile_mask(r, tile_size)?.expect("mask checked above"));
        }
        if let Some(r) = test.iter().find(|r| r.bands() != bands || r.mask().is_none()) {
            return Err(Error::InvalidArgument(format!(
                "test rasters need {bands} bands and a mask, got {} bands (mask: {})",
                r.bands(),
                r.mask().is_some()
            )));
        }
        Ok(Self {
            train_tiles: Tensor4::stack(&tiles.iter().collect::<Vec<_>>())?,
            train_masks: Tensor4::stack(&masks.iter().collect::<Vec<_>>())?,
            test,
            stats,
            tile_size,
        })
    }

    pub fn from_manifest(path: impl AsRef<std::path::Path>, tile_size: usize) -> Result<Self> {
        let entries = read_manifest(path)?;
        let mut train = Vec::new();
        let mut test = Vec::new();
        for e in entries {
            let r = load_raster(&e.path)?;
            match e.role {
                Role::Train => train.push(r),
                Role::Test => test.push(r),
            }
        }
        Self::from_rasters(&train, test, tile_size)
    }

    pub fn bands(&self) -> usize {
        self.stats.bands()
    }

    pub fn tile_size(&self) -> usize {
        self.tile_size
    }

    pub fn n_train_tiles(&self) -> usize {
        self.train_tiles.shape().n
    }

    pub fn stats(&self) -> &NormStats {
        &self.stats
    }

    pub fn test_rasters(&self) -> &[Raster] {
        &self.test
    }

    pub fn train_masks(&self) -> &Tensor4 {
        &self.train_masks
    }

    /// Training tiles restricted to the bands in `mask`.
    pub fn train_inputs(&self, mask: &BandMask) -> Result<Tensor4> {
        if mask.len() != self.bands() {
            return Err(Error::shape("train_inputs", format!("{}-band mask", self.bands()), mask.len()));
        }
        if mask.is_zero() {
            return Err(Error::InvalidArgument("all-zero band mask selects no input bands".into()));
        }
        if mask.is_all() {
            return Ok(self.train_tiles.clone());
        }
        let idx = mask.indices();
        let s = self.train_tiles.shape();
        let mut data = Vec::with_capacity(s.len() / s.c * idx.len());
        for px in self.train_tiles.data().chunks_exact(s.c) {
            data.extend(idx.iter().map(|&b| px[b]));
        }
        Tensor4::from_vec(Shape4 { c: idx.len(), ..s }, data)
    }
}

/// Recipe for a planted-band benchmark: scene template plus split sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticBenchmark {
    pub scene: SceneSpec,
    pub train_scenes: usize,
    pub test_scenes: usize,
    /// Test scene size; defaults to the training scene size when 0.
    pub test_height: usize,
    pub test_width: usize,
}

impl Default for SyntheticBenchmark {
    fn default() -> Self {
        Self { scene: SceneSpec::default(), train_scenes: 50, test_scenes: 4, test_height: 0, test_width: 0 }
    }
}

impl SyntheticBenchmark {
    /// Training scene `i` uses seed `scene.seed + i`; test scenes continue
    /// from a disjoint offset so no geometry is shared.
    pub fn generate(&self) -> Result<(Vec<Raster>, Vec<Raster>)> {
        if self.train_scenes == 0 || self.test_scenes == 0 {
            return Err(Error::InvalidArgument("benchmark needs >= 1 train and test scene".into()));
        }
        let base = self.scene.seed;
        let train = (0..self.train_scenes as u64)
            .map(|i| generate_scene(&self.scene.with_seed(base.wrapping_add(i))))
            .collect::<Result<Vec<_>>>()?;
        let test_spec = SceneSpec {
            height: if self.test_height > 0 { self.test_height } else { self.scene.height },
            width: if self.test_width > 0 { self.test_width } else { self.scene.width },
            ..self.scene.clone()
        };
        let test = (0..self.test_scenes as u64)
            .map(|i| generate_scene(&test_spec.with_seed(base.wrapping_add(1_000_000 + i))))
            .collect::<Result<Vec<_>>>()?;
        Ok((train, test))
    }

    pub fn build(&self, tile_size: usize) -> Result<RasterDataset> {
        let (train, test) = self.generate()?;
        RasterDataset::from_rasters(&train, test, tile_size)
    }
}
