//! Non-overlapping square tiling with zero padding on the bottom/right edge.

use super::Raster;
use crate::error::{Error, Result};
use crate::tensor::{Shape4, Tensor4};

/// Grid geometry needed to reassemble tiles into the source image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileLayout {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub tile_size: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TileLayout {
    pub fn new(height: usize, width: usize, channels: usize, tile_size: usize) -> Result<Self> {
        if tile_size < 2 {
            return Err(Error::InvalidArgument(format!("tile size must be >= 2, got {tile_size}")));
        }
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidArgument("cannot tile an empty image".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            tile_size,
            rows: height.div_ceil(tile_size),
            cols: width.div_ceil(tile_size),
        })
    }

    pub fn n_tiles(&self) -> usize {
        self.rows * self.cols
    }

    pub fn padded_height(&self) -> usize {
        self.rows * self.tile_size
    }

    pub fn padded_width(&self) -> usize {
        self.cols * self.tile_size
    }

    fn tile_shape(&self) -> Shape4 {
        Shape4::new(self.n_tiles(), self.tile_size, self.tile_size, self.channels)
    }
}

/// Cuts an HWC array into `(n_tiles, ts, ts, c)`, tiles in row-major grid order.
pub fn tile(
    data: &[f32],
    height: usize,
    width: usize,
    channels: usize,
    tile_size: usize,
) -> Result<(Tensor4, TileLayout)> {
    let layout = TileLayout::new(height, width, channels, tile_size)?;
    if data.len() != height * width * channels {
        return Err(Error::shape("tile", height * width * channels, data.len()));
    }
    let ts = tile_size;
    let mut out = Tensor4::zeros(layout.tile_shape())?;
    let s = out.shape();
    let buf = out.data_mut();
    for r in 0..layout.rows {
        for c in 0..layout.cols {
            let t = r * layout.cols + c;
            let y_end = ((r + 1) * ts).min(height);
            let x_end = ((c + 1) * ts).min(width);
            for y in r * ts..y_end {
                let src = (y * width + c * ts) * channels;
                let len = (x_end - c * ts) * channels;
                let dst = s.index(t, y - r * ts, 0, 0);
                buf[dst..dst + len].copy_from_slice(&data[src..src + len]);
            }
        }
    }
    Ok((out, layout))
}

/// Inverse of [`tile`]: reassembles and crops the padding.
pub fn reconstruct(tiles: &Tensor4, layout: &TileLayout) -> Result<Vec<f32>> {
    if tiles.shape() != layout.tile_shape() {
        return Err(Error::shape("reconstruct", layout.tile_shape(), tiles.shape()));
    }
    let (h, w, ch, ts) = (layout.height, layout.width, layout.channels, layout.tile_size);
    let s = tiles.shape();
    let mut out = vec![0.0f32; h * w * ch];
    for r in 0..layout.rows {
        for c in 0..layout.cols {
            let t = r * layout.cols + c;
            let y_end = ((r + 1) * ts).min(h);
            let x_end = ((c + 1) * ts).min(w);
            for y in r * ts..y_end {
                let dst = (y * w + c * ts) * ch;
                let len = (x_end - c * ts) * ch;
                let src = s.index(t, y - r * ts, 0, 0);
                out[dst..dst + len].copy_from_slice(&tiles.data()[src..src + len]);
            }
        }
    }
    Ok(out)
}

pub fn tile_raster(raster: &Raster, tile_size: usize) -> Result<(Tensor4, TileLayout)> {
    tile(raster.data(), raster.height(), raster.width(), raster.bands(), tile_size)
}

/// Tiles the target mask as a one-channel 0/1 tensor.
pub fn tile_mask(raster: &Raster, tile_size: usize) -> Result<Option<Tensor4>> {
    match raster.mask() {
        None => Ok(None),
        Some(m) => {
            let values: Vec<f32> = m.iter().map(|&v| v as f32).collect();
            Ok(Some(tile(&values, raster.height(), raster.width(), 1, tile_size)?.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        let (t, l) = tile(&vec![1.0; 64 * 64], 64, 64, 1, 32).unwrap();
        assert_eq!(t.shape().n, 4);
        assert_eq!(l.n_tiles(), 4);
        let (t, _) = tile(&vec![0.5; 96 * 96 * 12], 96, 96, 12, 96).unwrap();
        assert_eq!(t.shape(), Shape4::new(1, 96, 96, 12));
        let l = TileLayout::new(100, 70, 1, 32).unwrap();
        assert_eq!((l.padded_height(), l.padded_width()), (128, 96));
        assert!(TileLayout::new(4, 4, 1, 1).is_err());
    }

    #[test]
    fn padding_is_zero() {
        let (t, _) = tile(&[1.0; 9], 3, 3, 1, 2).unwrap();
        // Bottom-right tile holds the single pixel (2,2) at its origin.
        assert_eq!(t.sample(3).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn reconstruct_inverts_tile(h in 1usize..40, w in 1usize..40, c in 1usize..4, ts in 2usize..17, seed in any::<u64>()) {
            let mut state = seed | 1;
            let data: Vec<f32> = (0..h * w * c)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    f32::from_bits((state as u32 & 0x007f_ffff) | 0x3f80_0000) - 1.5
                })
                .collect();
            let (tiles, layout) = tile(&data, h, w, c, ts).unwrap();
            let back = reconstruct(&tiles, &layout).unwrap();
            prop_assert_eq!(
                back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
