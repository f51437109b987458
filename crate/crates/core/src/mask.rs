//! Binary band masks: which spectral bands feed the network.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Bit `i` set means band `i` is given to the model. Ordering is
/// lexicographic over the bitstring with band 0 first, so `"0111" < "1000"`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandMask {
    bits: Vec<bool>,
}

impl BandMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("band mask must have at least one band".into()));
        }
        Ok(Self { bits })
    }

    pub fn all(bands: usize) -> Self {
        Self { bits: vec![true; bands.max(1)] }
    }

    pub fn from_indices(bands: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; bands];
        for &i in indices {
            if i >= bands {
                return Err(Error::InvalidArgument(format!("band index {i} out of range for {bands} bands")));
            }
            bits[i] = true;
        }
        Self::new(bits)
    }

    /// Band `i` is bit `i` of `code`.
    pub fn from_code(bands: usize, code: u64) -> Self {
        Self { bits: (0..bands).map(|i| i < 64 && (code >> i) & 1 == 1).collect() }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, band: usize) -> bool {
        self.bits[band]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        self.popcount() == 0
    }

    pub fn is_all(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Selected band indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn contains_all(&self, bands: &[usize]) -> bool {
        bands.iter().all(|&b| b < self.len() && self.bits[b])
    }

    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::shape("BandMask::hamming", self.len(), other.len()));
        }
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count())
    }

    pub fn flipped(&self, band: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[band] = !bits[band];
        Self { bits }
    }
}

impl fmt::Display for BandMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BandMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BandMask({self})")
    }
}

impl FromStr for BandMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("invalid mask character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

/// Serialised as its bitstring, e.g. `"01001010"`.
impl serde::Serialize for BandMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BandMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
