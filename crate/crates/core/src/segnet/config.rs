use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UNetConfig {
    /// Network input channels: the selected band count, or all bands when
    /// `use_input_attention` is set.
    pub in_channels: usize,
    pub base_filters: usize,
    pub depth: usize,
    pub use_input_attention: bool,
    pub se_reduction: usize,
    pub seed: u64,
}

impl UNetConfig {
    pub fn new(in_channels: usize) -> Self {
        Self { in_channels, base_filters: 8, depth: 2, use_input_attention: false, se_reduction: 4, seed: 0 }
    }

    pub fn with_attention(mut self, on: bool) -> Self {
        self.use_input_attention = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_base_filters(mut self, base: usize) -> Self {
        self.base_filters = base;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.base_filters == 0 || self.depth == 0 || self.se_reduction == 0 {
            return Err(Error::InvalidArgument(format!(
                "in_channels, base_filters, depth and se_reduction must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    /// Bottleneck width of the squeeze-excite MLP.
    pub fn se_hidden(&self) -> usize {
        (self.in_channels / self.se_reduction).max(1)
    }

    /// Spatial dims must be multiples of this.
    pub fn spatial_multiple(&self) -> usize {
        1 << self.depth
    }

    pub fn filters_at(&self, level: usize) -> usize {
        self.base_filters << level
    }
}
