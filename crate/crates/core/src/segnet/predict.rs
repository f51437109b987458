//! Whole-raster inference by tiling, per-tile prediction and reassembly.

use rayon::prelude::*;

use super::loss::{binary_dice, DICE_THRESHOLD};
use super::unet::UNetModel;
use crate::error::{Error, Result};
use crate::mask::BandMask;
use crate::synthdata::{apply_norm, reconstruct, select_bands, tile_raster, NormStats, Raster, RasterDataset};
use crate::tensor::{Shape4, Tensor4};

const TILES_PER_CHUNK: usize = 32;

/// Probability map of shape `(1, height, width, 1)`.
///
/// Bands are selected with `mask`, normalised with the model's stored training
/// statistics (identity when it has none), zero-padded to whole tiles,
/// predicted tile by tile and cropped back to the raster size.
pub fn predict_raster(model: &UNetModel, raster: &Raster, tile_size: usize, mask: &BandMask) -> Result<Tensor4> {
    let cfg = model.config();
    if mask.len() != raster.bands() || mask.popcount() != cfg.in_channels {
        return Err(Error::InvalidArgument(format!(
            "band-count mismatch: model takes {} channels, mask {mask} selects {} of the raster's {} bands",
            cfg.in_channels,
            mask.popcount(),
            raster.bands()
        )));
    }
    if tile_size % cfg.spatial_multiple() != 0 {
        return Err(Error::InvalidArgument(format!(
            "tile size {tile_size} must be a multiple of {}",
            cfg.spatial_multiple()
        )));
    }
    let selected = select_bands(raster, mask)?;
    let stats = match &model.input_stats {
        Some(s) => s.select(mask)?,
        None => NormStats::identity(mask.popcount()),
    };
    let normed = apply_norm(&selected, &stats)?;
    let (tiles, layout) = tile_raster(&normed, tile_size)?;

    let s = tiles.shape();
    let per = s.h * s.w * s.c;
    let chunks: Vec<Result<Vec<f32>>> = tiles
        .data()
        .par_chunks(per * TILES_PER_CHUNK)
        .map(|chunk| {
            let x = Tensor4::from_vec(Shape4 { n: chunk.len() / per, ..s }, chunk.to_vec())?;
            Ok(model.predict(&x)?.into_vec())
        })
        .collect();
    let mut probs = Vec::with_capacity(s.n * s.h * s.w);
    for c in chunks {
        probs.extend(c?);
    }
    let pred_tiles = Tensor4::from_vec(s.with_c(1), probs)?;
    let out_layout = crate::synthdata::TileLayout { channels: 1, ..layout };
    let full = reconstruct(&pred_tiles, &out_layout)?;
    Tensor4::from_vec(Shape4::new(1, raster.height(), raster.width(), 1), full)
}

/// Dice of a thresholded probability map against the raster's target mask.
pub fn raster_dice(prob: &Tensor4, raster: &Raster) -> Result<f64> {
    let mask = raster.mask().ok_or_else(|| Error::InvalidArgument("raster has no target mask".into()))?;
    if prob.data().len() != mask.len() {
        return Err(Error::shape("raster_dice", mask.len(), prob.data().len()));
    }
    Ok(binary_dice(prob.data().iter().map(|&p| p as f64 >= DICE_THRESHOLD), mask.iter().map(|&m| m == 1)))
}

/// Mean test Dice over the dataset's test rasters, using the model's band mask.
pub fn evaluate(model: &UNetModel, dataset: &RasterDataset) -> Result<f64> {
    let mask = model.band_mask.clone().unwrap_or_else(|| BandMask::all(dataset.bands()));
    let rasters = dataset.test_rasters();
    if rasters.is_empty() {
        return Err(Error::InvalidArgument("dataset has no test rasters".into()));
    }
    let mut total = 0.0;
    for r in rasters {
        total += raster_dice(&predict_raster(model, r, dataset.tile_size(), &mask)?, r)?;
    }
    Ok(total / rasters.len() as f64)
}
