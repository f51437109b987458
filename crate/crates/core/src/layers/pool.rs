//! 2×2 max pooling, nearest-neighbour 2× upsampling and global average pooling.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape4, Tensor4};

/// Argmax positions recorded by [`maxpool2_forward`]; one flat input index
/// per output element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxPoolRecord {
    input_shape: Shape4,
    output_shape: Shape4,
    argmax: Vec<usize>,
}

impl MaxPoolRecord {
    pub fn input_shape(&self) -> Shape4 {
        self.input_shape
    }

    pub fn output_shape(&self) -> Shape4 {
        self.output_shape
    }
}

/// Ties go to the first maximal element of the window in row-major order.
pub fn maxpool2_forward<T: Scalar>(input: &Tensor4<T>) -> Result<(Tensor4<T>, MaxPoolRecord)> {
    let s = input.shape();
    if s.h % 2 != 0 || s.w % 2 != 0 {
        return Err(Error::InvalidArgument(format!("maxpool2 needs even spatial dims, got {}x{}", s.h, s.w)));
    }
    let os = Shape4::new(s.n, s.h / 2, s.w / 2, s.c);
    let mut out = Vec::with_capacity(os.len());
    let mut argmax = Vec::with_capacity(os.len());
    let data = input.data();
    for n in 0..s.n {
        for y in 0..os.h {
            for x in 0..os.w {
                for c in 0..s.c {
                    let mut best = s.index(n, 2 * y, 2 * x, c);
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = s.index(n, 2 * y + dy, 2 * x + dx, c);
                        if data[i] > data[best] {
                            best = i;
                        }
                    }
                    out.push(data[best]);
                    argmax.push(best);
                }
            }
        }
    }
    Ok((Tensor4::from_vec(os, out)?, MaxPoolRecord { input_shape: s, output_shape: os, argmax }))
}

pub fn maxpool2_backward<T: Scalar>(record: &MaxPoolRecord, d_output: &Tensor4<T>) -> Result<Tensor4<T>> {
    if d_output.shape() != record.output_shape || record.argmax.len() != record.output_shape.len() {
        return Err(Error::shape("maxpool2_backward (stale record)", record.output_shape, d_output.shape()));
    }
    let mut d_input = Tensor4::zeros(record.input_shape)?;
    let d = d_input.data_mut();
    for (&i, &g) in record.argmax.iter().zip(d_output.data()) {
        d[i] += g;
    }
    Ok(d_input)
}

pub fn upsample2_forward<T: Scalar>(input: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = input.shape();
    let os = Shape4::new(s.n, s.h * 2, s.w * 2, s.c);
    let mut out = Vec::with_capacity(os.len());
    for n in 0..s.n {
        for y in 0..os.h {
            for x in 0..os.w {
                out.extend_from_slice(input.pixel(n, y / 2, x / 2));
            }
        }
    }
    Tensor4::from_vec(os, out)
}

/// Sums each 2×2 block of replicated gradients back onto its source pixel.
pub fn upsample2_backward<T: Scalar>(d_output: &Tensor4<T>) -> Result<Tensor4<T>> {
    let os = d_output.shape();
    if os.h % 2 != 0 || os.w % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "upsample2 gradient must have even spatial dims, got {}x{}",
            os.h, os.w
        )));
    }
    let s = Shape4::new(os.n, os.h / 2, os.w / 2, os.c);
    let mut d_input = Tensor4::zeros(s)?;
    let src = d_output.data();
    let dst = d_input.data_mut();
    for n in 0..os.n {
        for y in 0..os.h {
            for x in 0..os.w {
                let o = os.index(n, y, x, 0);
                let i = s.index(n, y / 2, x / 2, 0);
                for c in 0..os.c {
                    dst[i + c] += src[o + c];
                }
            }
        }
    }
    Ok(d_input)
}

/// Spatial mean per channel: `(n, h, w, c) -> (n, 1, 1, c)`.
pub fn global_avg_pool_forward<T: Scalar>(input: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = input.shape();
    let inv = T::one() / T::of_f64((s.h * s.w) as f64);
    let mut out = vec![T::zero(); s.n * s.c];
    for n in 0..s.n {
        let acc = &mut out[n * s.c..(n + 1) * s.c];
        for y in 0..s.h {
            for x in 0..s.w {
                for (a, &v) in acc.iter_mut().zip(input.pixel(n, y, x)) {
                    *a += v;
                }
            }
        }
        for a in acc.iter_mut() {
            *a *= inv;
        }
    }
    Tensor4::from_vec(Shape4::new(s.n, 1, 1, s.c), out)
}

pub fn global_avg_pool_backward<T: Scalar>(input_shape: Shape4, d_output: &Tensor4<T>) -> Result<Tensor4<T>> {
    let s = input_shape;
    let expected = Shape4::new(s.n, 1, 1, s.c);
    if d_output.shape() != expected {
        return Err(Error::shape("global_avg_pool_backward", expected, d_output.shape()));
    }
    let inv = T::one() / T::of_f64((s.h * s.w) as f64);
    let g = d_output.data();
    Tensor4::from_fn(s, |n, _, _, c| g[n * s.c + c] * inv)
}
