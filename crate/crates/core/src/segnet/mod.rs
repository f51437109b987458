//! Compact U-Net segmenter with optional channel attention on its input.

mod adam;
mod checkpoint;
mod config;
pub mod loss;
mod predict;
pub mod se;
mod train;
mod unet;

pub use adam::AdamState;
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::UNetConfig;
pub use loss::{binary_dice, binary_iou, dice_coefficient, soft_iou_loss, DICE_THRESHOLD, IOU_SMOOTHING};
pub use predict::{evaluate, predict_raster, raster_dice};
pub use train::{fit, train, TrainOptions, TrainReport};
pub use unet::{ForwardCache, ModelGrads, ParamSpec, UNetModel};
