//! Squeeze-excite attention over input channels:
//! `u = gap(x)`, `h = σ(W2·relu(W1·u + b1) + b2)`, `y = x ⊙ h`.

use crate::error::{Error, Result};
use crate::layers::{
    dense_backward, dense_forward, global_avg_pool_backward, global_avg_pool_forward, relu_backward, relu_forward,
    sigmoid_backward, sigmoid_forward,
};
use crate::tensor::{Scalar, Tensor4};

#[derive(Clone, Copy, Debug)]
pub struct SeParams<'a, T> {
    pub channels: usize,
    pub hidden: usize,
    /// `(channels, hidden)`
    pub w1: &'a [T],
    pub b1: &'a [T],
    /// `(hidden, channels)`
    pub w2: &'a [T],
    pub b2: &'a [T],
}

#[derive(Clone, Debug)]
pub struct SeCache<T> {
    input: Tensor4<T>,
    pooled: Tensor4<T>,
    hidden: Tensor4<T>,
    weights: Tensor4<T>,
}

impl<T: Scalar> SeCache<T> {
    /// Channel weights `h`, shape `(n, 1, 1, c)`.
    pub fn weights(&self) -> &Tensor4<T> {
        &self.weights
    }
}

#[derive(Clone, Debug)]
pub struct SeGrads<T> {
    pub d_input: Tensor4<T>,
    pub d_w1: Vec<T>,
    pub d_b1: Vec<T>,
    pub d_w2: Vec<T>,
    pub d_b2: Vec<T>,
}

fn scale_channels<T: Scalar>(x: &Tensor4<T>, h: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = x.shape();
    let hw = h.data();
    let mut out = x.clone();
    let per = s.h * s.w * s.c;
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let n = i / per;
        *v *= hw[n * s.c + i % s.c];
    }
    Ok(out)
}

/// Returns the rescaled input and the cache (which also exposes `h`).
pub fn se_attention_forward<T: Scalar>(input: &Tensor4<T>, p: SeParams<'_, T>) -> Result<(Tensor4<T>, SeCache<T>)> {
    if input.shape().c != p.channels {
        return Err(Error::shape("se_attention_forward", format!("{} channels", p.channels), input.shape()));
    }
    let pooled = global_avg_pool_forward(input)?;
    let hidden = relu_forward(&dense_forward(&pooled, p.channels, p.hidden, p.w1, p.b1)?);
    let weights = sigmoid_forward(&dense_forward(&hidden, p.hidden, p.channels, p.w2, p.b2)?);
    let out = scale_channels(input, &weights)?;
    Ok((out, SeCache { input: input.clone(), pooled, hidden, weights }))
}

pub fn se_attention_backward<T: Scalar>(
    cache: &SeCache<T>,
    p: SeParams<'_, T>,
    d_output: &Tensor4<T>,
) -> Result<SeGrads<T>> {
    let s = cache.input.shape();
    if d_output.shape() != s {
        return Err(Error::shape("se_attention_backward", s, d_output.shape()));
    }
    // y = x ⊙ h: direct path and the path through h.
    let mut d_input = scale_channels(d_output, &cache.weights)?;
    let mut d_h = vec![T::zero(); s.n * s.c];
    let per = s.h * s.w * s.c;
    for (i, (&g, &x)) in d_output.data().iter().zip(cache.input.data()).enumerate() {
        d_h[(i / per) * s.c + i % s.c] += g * x;
    }
    let d_h = Tensor4::from_vec(cache.weights.shape(), d_h)?;
    let d_z2 = sigmoid_backward(&cache.weights, &d_h)?;
    let g2 = dense_backward(&cache.hidden, p.hidden, p.channels, p.w2, &d_z2)?;
    let d_z1 = relu_backward(&cache.hidden, &g2.d_input)?;
    let g1 = dense_backward(&cache.pooled, p.channels, p.hidden, p.w1, &d_z1)?;
    let d_gap = global_avg_pool_backward(s, &g1.d_input)?;
    for (d, &g) in d_input.data_mut().iter_mut().zip(d_gap.data()) {
        *d += g;
    }
    let (d_w1, d_b1) = g1.d_params.split_at(p.channels * p.hidden);
    let (d_w2, d_b2) = g2.d_params.split_at(p.hidden * p.channels);
    Ok(SeGrads { d_input, d_w1: d_w1.to_vec(), d_b1: d_b1.to_vec(), d_w2: d_w2.to_vec(), d_b2: d_b2.to_vec() })
}
