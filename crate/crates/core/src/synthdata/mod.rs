//! Synthetic planted-band scenes, raster I/O, normalisation and tiling.

mod dataset;
pub mod io;
mod norm;
mod raster;
mod scene;
mod tiling;

pub use dataset::{RasterDataset, SyntheticBenchmark};
pub use io::{load_raster, read_manifest, save_raster, write_manifest, ManifestEntry, Role};
pub use norm::{apply_norm, compute_norm_stats, NormStats, STD_FLOOR};
pub use raster::{select_bands, Raster};
pub use scene::{generate_scene, SceneSpec};
pub use tiling::{reconstruct, tile, tile_mask, tile_raster, TileLayout};
