//! Spectral band selection for binary segmentation of multiband rasters.
//!
//! A small U-Net segmenter is trained on a subset of bands chosen either by
//! hand, by channel attention or by Bayesian optimisation over band masks
//! with a Gaussian-process surrogate.

pub mod error;
pub mod gp;
pub mod gradcheck;
pub mod harness;
pub mod layers;
pub mod mask;
pub mod segnet;
pub mod synthdata;
pub mod tensor;

pub use error::{Error, Result};
pub use mask::BandMask;
pub use tensor::{Scalar, Shape4, Tensor4};
