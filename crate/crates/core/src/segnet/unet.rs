//! Encoder–decoder segmentation network with skip connections.
//!
//! `[SE] → ([conv3+relu]×2, maxpool)×depth → [conv3+relu]×2 →
//! (upsample, concat skip, [conv3+relu]×2)×depth → conv1 → sigmoid`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::UNetConfig;
use super::se::{se_attention_backward, se_attention_forward, SeCache, SeParams};
use crate::error::{Error, Result};
use crate::layers::{
    concat_channels, conv2d_backward, conv2d_forward, maxpool2_backward, maxpool2_forward, relu_backward, relu_forward,
    sigmoid_backward, sigmoid_forward, split_channels, upsample2_backward, upsample2_forward, ConvShape, MaxPoolRecord,
};
use crate::mask::BandMask;
use crate::synthdata::NormStats;
use crate::tensor::{Scalar, Tensor4};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Index of a conv weight tensor; its bias is the next parameter.
#[derive(Clone, Copy, Debug)]
struct ConvSlot {
    shape: ConvShape,
    weight: usize,
}

#[derive(Clone, Copy, Debug)]
struct SeSlot {
    channels: usize,
    hidden: usize,
    w1: usize,
}

#[derive(Clone, Debug)]
struct Layout {
    se: Option<SeSlot>,
    enc: Vec<[ConvSlot; 2]>,
    mid: [ConvSlot; 2],
    /// Decoder blocks in execution order (deepest level first).
    dec: Vec<[ConvSlot; 2]>,
    head: ConvSlot,
    specs: Vec<ParamSpec>,
}

impl Layout {
    fn new(cfg: &UNetConfig) -> Self {
        let mut specs = Vec::new();
        let conv = |name: String, shape: ConvShape, specs: &mut Vec<ParamSpec>| {
            let weight = specs.len();
            specs.push(ParamSpec {
                name: format!("{name}.weight"),
                shape: vec![shape.kh, shape.kw, shape.c_in, shape.c_out],
            });
            specs.push(ParamSpec { name: format!("{name}.bias"), shape: vec![shape.c_out] });
            ConvSlot { shape, weight }
        };

        let se = cfg.use_input_attention.then(|| {
            let (c, h) = (cfg.in_channels, cfg.se_hidden());
            let w1 = specs.len();
            for (name, shape) in [
                ("se.fc1.weight", vec![c, h]),
                ("se.fc1.bias", vec![h]),
                ("se.fc2.weight", vec![h, c]),
                ("se.fc2.bias", vec![c]),
            ] {
                specs.push(ParamSpec { name: name.into(), shape });
            }
            SeSlot { channels: c, hidden: h, w1 }
        });

        let mut c_in = cfg.in_channels;
        let mut enc = Vec::new();
        for level in 0..cfg.depth {
            let f = cfg.filters_at(level);
            enc.push([
                conv(format!("enc{level}.conv0"), ConvShape::square(3, c_in, f), &mut specs),
                conv(format!("enc{level}.conv1"), ConvShape::square(3, f, f), &mut specs),
            ]);
            c_in = f;
        }
        let f = cfg.filters_at(cfg.depth);
        let mid = [
            conv("mid.conv0".into(), ConvShape::square(3, c_in, f), &mut specs),
            conv("mid.conv1".into(), ConvShape::square(3, f, f), &mut specs),
        ];
        c_in = f;
        let mut dec = Vec::new();
        for level in (0..cfg.depth).rev() {
            let f = cfg.filters_at(level);
            dec.push([
                conv(format!("dec{level}.conv0"), ConvShape::square(3, c_in + f, f), &mut specs),
                conv(format!("dec{level}.conv1"), ConvShape::square(3, f, f), &mut specs),
            ]);
            c_in = f;
        }
        let head = conv("head".into(), ConvShape::square(1, c_in, 1), &mut specs);
        Self { se, enc, mid, dec, head, specs }
    }
}

#[derive(Clone, Debug)]
struct BlockCache<T> {
    x: Tensor4<T>,
    a0: Tensor4<T>,
    a1: Tensor4<T>,
}

/// Activations kept by [`UNetModel::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    se: Option<SeCache<T>>,
    enc: Vec<BlockCache<T>>,
    pools: Vec<MaxPoolRecord>,
    mid: BlockCache<T>,
    dec: Vec<BlockCache<T>>,
    up_channels: Vec<usize>,
    head_input: Tensor4<T>,
    output: Tensor4<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &Tensor4<T> {
        &self.output
    }

    /// Squeeze-excite channel weights, when the model has input attention.
    pub fn attention_weights(&self) -> Option<&Tensor4<T>> {
        self.se.as_ref().map(|c| c.weights())
    }
}

#[derive(Clone, Debug)]
pub struct ModelGrads<T> {
    /// Aligned with [`UNetModel::params`].
    pub params: Vec<Vec<T>>,
    pub d_input: Tensor4<T>,
}

#[derive(Clone, Debug)]
pub struct UNetModel<T = f32> {
    config: UNetConfig,
    layout: Layout,
    params: Vec<Vec<T>>,
    /// Full-band normalisation statistics of the data the model was trained on.
    pub input_stats: Option<NormStats>,
    /// Bands the model was trained on.
    pub band_mask: Option<BandMask>,
}

impl<T: Scalar> UNetModel<T> {
    /// He-uniform weights (`±sqrt(6 / fan_in)`) and zero biases, seeded by `config.seed`.
    pub fn new(config: UNetConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = layout
            .specs
            .iter()
            .map(|spec| {
                if spec.shape.len() == 1 {
                    return vec![T::zero(); spec.len()];
                }
                let fan_in: usize = spec.shape[..spec.shape.len() - 1].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                (0..spec.len()).map(|_| T::of_f64(rng.random_range(-limit..limit))).collect()
            })
            .collect();
        Ok(Self { config, layout, params, input_stats: None, band_mask: None })
    }

    pub fn from_params(config: UNetConfig, params: Vec<Vec<T>>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.specs.len() {
            return Err(Error::shape("UNetModel::from_params", layout.specs.len(), params.len()));
        }
        for (p, spec) in params.iter().zip(&layout.specs) {
            if p.len() != spec.len() {
                return Err(Error::shape(
                    "UNetModel::from_params",
                    format!("{} = {:?}", spec.name, spec.shape),
                    p.len(),
                ));
            }
        }
        Ok(Self { config, layout, params, input_stats: None, band_mask: None })
    }

    /// Parameter names and shapes a model with `config` would have.
    pub fn specs_for(config: &UNetConfig) -> Result<Vec<ParamSpec>> {
        config.validate()?;
        Ok(Layout::new(config).specs)
    }

    pub fn config(&self) -> &UNetConfig {
        &self.config
    }

    pub fn param_specs(&self) -> &[ParamSpec] {
        &self.layout.specs
    }

    pub fn params(&self) -> &[Vec<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    pub fn cast<U: Scalar>(&self) -> UNetModel<U> {
        UNetModel {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| p.iter().map(|v| U::of_f64(v.as_f64())).collect()).collect(),
            input_stats: self.input_stats.clone(),
            band_mask: self.band_mask.clone(),
        }
    }

    fn se_params(&self, slot: SeSlot) -> SeParams<'_, T> {
        SeParams {
            channels: slot.channels,
            hidden: slot.hidden,
            w1: &self.params[slot.w1],
            b1: &self.params[slot.w1 + 1],
            w2: &self.params[slot.w1 + 2],
            b2: &self.params[slot.w1 + 3],
        }
    }

    fn conv(&self, slot: ConvSlot, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        conv2d_forward(x, slot.shape, &self.params[slot.weight], &self.params[slot.weight + 1])
    }

    fn block_forward(&self, slots: &[ConvSlot; 2], x: Tensor4<T>) -> Result<BlockCache<T>> {
        let a0 = relu_forward(&self.conv(slots[0], &x)?);
        let a1 = relu_forward(&self.conv(slots[1], &a0)?);
        Ok(BlockCache { x, a0, a1 })
    }

    fn block_backward(
        &self,
        slots: &[ConvSlot; 2],
        cache: &BlockCache<T>,
        d_a1: &Tensor4<T>,
        grads: &mut [Vec<T>],
    ) -> Result<Tensor4<T>> {
        let d_z1 = relu_backward(&cache.a1, d_a1)?;
        let g1 = conv2d_backward(&cache.a0, slots[1].shape, &self.params[slots[1].weight], &d_z1)?;
        store_conv_grads(grads, slots[1], g1.d_params);
        let d_z0 = relu_backward(&cache.a0, &g1.d_input)?;
        let g0 = conv2d_backward(&cache.x, slots[0].shape, &self.params[slots[0].weight], &d_z0)?;
        store_conv_grads(grads, slots[0], g0.d_params);
        Ok(g0.d_input)
    }

    pub fn forward(&self, input: &Tensor4<T>) -> Result<(Tensor4<T>, ForwardCache<T>)> {
        let s = input.shape();
        let m = self.config.spatial_multiple();
        if s.h % m != 0 || s.w % m != 0 {
            return Err(Error::InvalidArgument(format!(
                "spatial dims {}x{} must be divisible by 2^depth = {m}",
                s.h, s.w
            )));
        }
        if s.c != self.config.in_channels {
            return Err(Error::shape("unet_forward", format!("{} input channels", self.config.in_channels), s));
        }

        let (mut x, se) = match self.layout.se {
            Some(slot) => {
                let (y, cache) = se_attention_forward(input, self.se_params(slot))?;
                (y, Some(cache))
            }
            None => (input.clone(), None),
        };

        let mut enc = Vec::with_capacity(self.layout.enc.len());
        let mut pools = Vec::with_capacity(self.layout.enc.len());
        for slots in &self.layout.enc {
            let block = self.block_forward(slots, x)?;
            let (pooled, rec) = maxpool2_forward(&block.a1)?;
            enc.push(block);
            pools.push(rec);
            x = pooled;
        }
        let mid = self.block_forward(&self.layout.mid, x)?;
        x = mid.a1.clone();

        let mut dec = Vec::with_capacity(self.layout.dec.len());
        let mut up_channels = Vec::with_capacity(self.layout.dec.len());
        for (slots, skip) in self.layout.dec.iter().zip(enc.iter().rev()) {
            let up = upsample2_forward(&x)?;
            up_channels.push(up.shape().c);
            let cat = concat_channels(&up, &skip.a1)?;
            let block = self.block_forward(slots, cat)?;
            x = block.a1.clone();
            dec.push(block);
        }
        let output = sigmoid_forward(&self.conv(self.layout.head, &x)?);
        Ok((output.clone(), ForwardCache { se, enc, pools, mid, dec, up_channels, head_input: x, output }))
    }

    pub fn predict(&self, input: &Tensor4<T>) -> Result<Tensor4<T>> {
        Ok(self.forward(input)?.0)
    }

    /// Backpropagates ∂L/∂prediction through the whole network.
    pub fn backward(&self, cache: &ForwardCache<T>, d_output: &Tensor4<T>) -> Result<ModelGrads<T>> {
        let mut grads: Vec<Vec<T>> = self.params.iter().map(|p| vec![T::zero(); p.len()]).collect();

        let d_logits = sigmoid_backward(&cache.output, d_output)?;
        let head = self.layout.head;
        let g = conv2d_backward(&cache.head_input, head.shape, &self.params[head.weight], &d_logits)?;
        store_conv_grads(&mut grads, head, g.d_params);
        let mut d_x = g.d_input;

        let mut d_skips = Vec::with_capacity(cache.dec.len());
        for ((slots, block), &up_c) in self.layout.dec.iter().zip(&cache.dec).zip(&cache.up_channels).rev() {
            let d_cat = self.block_backward(slots, block, &d_x, &mut grads)?;
            let (d_up, d_skip) = split_channels(&d_cat, up_c)?;
            d_skips.push(d_skip);
            d_x = upsample2_backward(&d_up)?;
        }
        // d_skips is now ordered shallowest level first.
        d_x = self.block_backward(&self.layout.mid, &cache.mid, &d_x, &mut grads)?;
        for (level, (slots, block)) in self.layout.enc.iter().zip(&cache.enc).enumerate().rev() {
            let mut d_a1 = maxpool2_backward(&cache.pools[level], &d_x)?;
            for (d, &s) in d_a1.data_mut().iter_mut().zip(d_skips[level].data()) {
                *d += s;
            }
            d_x = self.block_backward(slots, block, &d_a1, &mut grads)?;
        }

        let d_input = match (self.layout.se, &cache.se) {
            (Some(slot), Some(se_cache)) => {
                let g = se_attention_backward(se_cache, self.se_params(slot), &d_x)?;
                grads[slot.w1] = g.d_w1;
                grads[slot.w1 + 1] = g.d_b1;
                grads[slot.w1 + 2] = g.d_w2;
                grads[slot.w1 + 3] = g.d_b2;
                g.d_input
            }
            _ => d_x,
        };
        Ok(ModelGrads { params: grads, d_input })
    }
}

fn store_conv_grads<T: Scalar>(grads: &mut [Vec<T>], slot: ConvSlot, mut d_params: Vec<T>) {
    let d_bias = d_params.split_off(slot.shape.weight_len());
    grads[slot.weight] = d_params;
    grads[slot.weight + 1] = d_bias;
}
