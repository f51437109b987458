use crate::error::{Error, Result};
use crate::mask::BandMask;

/// One `height × width × bands` image in HWC order, with an optional binary
/// target mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f32>,
    mask: Option<Vec<u8>>,
}

impl Raster {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f32>, mask: Option<Vec<u8>>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::InvalidArgument(format!("raster dims must be >= 1, got {height}x{width}x{bands}")));
        }
        let expected = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(bands))
            .ok_or_else(|| Error::InvalidArgument("raster dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::shape("Raster::new", expected, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("raster value at flat index {i}")));
        }
        if let Some(m) = &mask {
            if m.len() != height * width {
                return Err(Error::shape("Raster::new (mask)", height * width, m.len()));
            }
            if m.iter().any(|&v| v > 1) {
                return Err(Error::InvalidArgument("mask values must be 0 or 1".into()));
            }
        }
        Ok(Self { height, width, bands, data, mask })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn mask(&self) -> Option<&[u8]> {
        self.mask.as_deref()
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, band: usize) -> f32 {
        self.data[(y * self.width + x) * self.bands + band]
    }

    /// All values of one band in row-major pixel order.
    pub fn band(&self, band: usize) -> Vec<f32> {
        self.data.iter().skip(band).step_by(self.bands).copied().collect()
    }

    pub fn without_mask(mut self) -> Self {
        self.mask = None;
        self
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f32) -> f32) -> Self {
        let bands = self.bands;
        Self { data: self.data.iter().enumerate().map(|(i, &v)| f(i % bands, v)).collect(), ..self.clone() }
    }
}

/// Keeps the bands set in `mask`, in ascending index order.
pub fn select_bands(raster: &Raster, mask: &BandMask) -> Result<Raster> {
    if mask.len() != raster.bands {
        return Err(Error::shape("select_bands", format!("{}-band mask", raster.bands), mask.len()));
    }
    if mask.is_zero() {
        return Err(Error::InvalidArgument("all-zero band mask selects no input bands".into()));
    }
    if mask.is_all() {
        return Ok(raster.clone());
    }
    let idx = mask.indices();
    let mut data = Vec::with_capacity(raster.pixels() * idx.len());
    for px in raster.data.chunks_exact(raster.bands) {
        data.extend(idx.iter().map(|&b| px[b]));
    }
    Raster::new(raster.height, raster.width, idx.len(), data, raster.mask.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Raster {
        let data = (0..2 * 3 * 4).map(|v| v as f32).collect();
        Raster::new(2, 3, 4, data, Some(vec![0, 1, 0, 1, 1, 0])).unwrap()
    }

    #[test]
    fn validates_inputs() {
        assert!(Raster::new(2, 2, 1, vec![0.0; 3], None).is_err());
        assert!(Raster::new(1, 1, 1, vec![f32::NAN], None).is_err());
        assert!(Raster::new(1, 2, 1, vec![0.0; 2], Some(vec![0, 2])).is_err());
        assert!(Raster::new(usize::MAX, 2, 2, vec![], None).is_err());
    }

    #[test]
    fn select_all_is_identity_and_single_band() {
        let r = sample();
        assert_eq!(select_bands(&r, &BandMask::all(4)).unwrap(), r);
        let e3 = BandMask::from_indices(4, &[3]).unwrap();
        let s = select_bands(&r, &e3).unwrap();
        assert_eq!(s.bands(), 1);
        assert_eq!(s.data(), r.band(3).as_slice());
        let again = select_bands(&s, &BandMask::all(1)).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn select_rejects_zero_and_length() {
        let r = sample();
        assert!(select_bands(&r, &BandMask::from_code(4, 0)).is_err());
        assert!(select_bands(&r, &BandMask::all(3)).is_err());
    }
}
