//! Same-padded, stride-1 2-D convolution (cross-correlation).
//!
//! Weights are laid out `(kh, kw, c_in, c_out)`. Each output pixel is
//! reduced in a fixed order, so results never depend on the batch size.

use super::conv_kernel;
use crate::error::{Error, Result};
use crate::tensor::{LayerGrads, Scalar, Shape4, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvShape {
    pub kh: usize,
    pub kw: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl ConvShape {
    pub const fn new(kh: usize, kw: usize, c_in: usize, c_out: usize) -> Self {
        Self { kh, kw, c_in, c_out }
    }

    pub const fn square(k: usize, c_in: usize, c_out: usize) -> Self {
        Self::new(k, k, c_in, c_out)
    }

    pub fn weight_len(&self) -> usize {
        self.kh * self.kw * self.c_in * self.c_out
    }

    pub fn param_len(&self) -> usize {
        self.weight_len() + self.c_out
    }
}

fn validate<T: Scalar>(op: &'static str, input: Shape4, k: ConvShape, weights: &[T]) -> Result<()> {
    if k.kh % 2 == 0 || k.kw % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "{op}: same padding needs odd kernel sizes, got {}x{}",
            k.kh, k.kw
        )));
    }
    if input.c != k.c_in {
        return Err(Error::shape(op, format!("{} input channels", k.c_in), input));
    }
    if weights.len() != k.weight_len() {
        return Err(Error::shape(
            op,
            format!("{} weights for {:?}", k.weight_len(), k),
            format!("{} weights", weights.len()),
        ));
    }
    Ok(())
}

pub fn conv2d_forward<T: Scalar>(input: &Tensor4<T>, k: ConvShape, weights: &[T], bias: &[T]) -> Result<Tensor4<T>> {
    let s = input.shape();
    validate("conv2d_forward", s, k, weights)?;
    if bias.len() != k.c_out {
        return Err(Error::shape("conv2d_forward", format!("{} biases", k.c_out), format!("{} biases", bias.len())));
    }
    let mut out = Tensor4::zeros(s.with_c(k.c_out))?;
    conv_kernel::forward(input.data(), s, k, weights, bias, out.data_mut());
    Ok(out)
}

/// Returns `d_input` and `d_params = [d_weights (kh,kw,c_in,c_out) | d_bias (c_out)]`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor4<T>,
    k: ConvShape,
    weights: &[T],
    d_output: &Tensor4<T>,
) -> Result<LayerGrads<T>> {
    let s = input.shape();
    validate("conv2d_backward", s, k, weights)?;
    if d_output.shape() != s.with_c(k.c_out) {
        return Err(Error::shape("conv2d_backward", s.with_c(k.c_out), d_output.shape()));
    }
    let mut d_params = vec![T::zero(); k.param_len()];
    let (d_w, d_b) = d_params.split_at_mut(k.weight_len());
    for px in d_output.data().chunks_exact(k.c_out) {
        for (b, &v) in d_b.iter_mut().zip(px) {
            *b += v;
        }
    }
    conv_kernel::weight_grad(input.data(), s, k, d_output.data(), d_w);
    let (kt, wt) = conv_kernel::flip_transpose(k, weights);
    let mut d_input = Tensor4::zeros(s)?;
    conv_kernel::forward(d_output.data(), s.with_c(k.c_out), kt, &wt, &vec![T::zero(); k.c_in], d_input.data_mut());
    Ok(LayerGrads { d_input, d_params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct nested-loop correlation, written independently of the fast kernels.
    fn naive_conv(input: &Tensor4<f64>, k: ConvShape, w: &[f64], b: &[f64]) -> Tensor4<f64> {
        let s = input.shape();
        let (ph, pw) = ((k.kh / 2) as isize, (k.kw / 2) as isize);
        Tensor4::from_fn(s.with_c(k.c_out), |n, y, x, co| {
            let mut acc = b[co];
            for ky in 0..k.kh {
                for kx in 0..k.kw {
                    let iy = y as isize + ky as isize - ph;
                    let ix = x as isize + kx as isize - pw;
                    if iy < 0 || ix < 0 || iy >= s.h as isize || ix >= s.w as isize {
                        continue;
                    }
                    for ci in 0..k.c_in {
                        let wi = ((ky * k.kw + kx) * k.c_in + ci) * k.c_out + co;
                        acc += input.get(n, iy as usize, ix as usize, ci) * w[wi];
                    }
                }
            }
            acc
        })
        .unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_input_gives_bias() {
        let input = Tensor4::<f32>::zeros(Shape4::new(1, 4, 4, 1)).unwrap();
        let k = ConvShape::square(3, 1, 1);
        let out = conv2d_forward(&input, k, &[0.3; 9], &[0.75]).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn identity_pointwise_kernel() {
        let input = Tensor4::from_fn(Shape4::new(2, 3, 5, 1), |n, y, x, _| (n + y * 7 + x) as f32 * 0.1).unwrap();
        let out = conv2d_forward(&input, ConvShape::square(1, 1, 1), &[1.0], &[0.0]).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = Shape4::new(1, 5, 5, 2);
        let k = ConvShape::square(3, 2, 3);
        let input = Tensor4::from_vec(s, random(&mut rng, s.len())).unwrap();
        let w = random(&mut rng, k.weight_len());
        let b = random(&mut rng, 3);
        let got = conv2d_forward(&input, k, &w, &b).unwrap();
        let want = naive_conv(&input, k, &w, &b);
        let max = got.data().iter().zip(want.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-6, "max abs diff {max}");

        // Same check in f32 storage.
        let got32 = conv2d_forward(
            &input.cast::<f32>(),
            k,
            &w.iter().map(|&v| v as f32).collect::<Vec<_>>(),
            &b.iter().map(|&v| v as f32).collect::<Vec<_>>(),
        )
        .unwrap();
        let max = got32.data().iter().zip(want.data()).map(|(a, b)| (*a as f64 - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-6, "f32 max abs diff {max}");
    }

    #[test]
    fn backward_zero_upstream_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Shape4::new(2, 4, 4, 2);
        let k = ConvShape::square(3, 2, 2);
        let input = Tensor4::from_vec(s, random(&mut rng, s.len())).unwrap();
        let w = random(&mut rng, k.weight_len());
        let g = conv2d_backward(&input, k, &w, &Tensor4::zeros(s.with_c(2)).unwrap()).unwrap();
        assert!(g.d_input.data().iter().all(|&v| v == 0.0));
        assert!(g.d_params.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_gradient_of_sum_is_pixel_count() {
        let s = Shape4::new(3, 4, 6, 2);
        let k = ConvShape::square(3, 2, 4);
        let input = Tensor4::filled(s, 0.5f64).unwrap();
        let w = vec![0.1; k.weight_len()];
        let ones = Tensor4::filled(s.with_c(4), 1.0).unwrap();
        let g = conv2d_backward(&input, k, &w, &ones).unwrap();
        for &db in &g.d_params[k.weight_len()..] {
            assert_eq!(db, (3 * 4 * 6) as f64);
        }
    }

    #[test]
    fn rejects_channel_and_shape_mismatch() {
        let input = Tensor4::<f32>::zeros(Shape4::new(1, 4, 4, 3)).unwrap();
        let k = ConvShape::square(3, 2, 1);
        assert!(matches!(conv2d_forward(&input, k, &[0.0; 18], &[0.0]), Err(Error::ShapeMismatch { .. })));
        let k = ConvShape::square(3, 3, 1);
        let bad_grad = Tensor4::<f32>::zeros(Shape4::new(1, 4, 4, 2)).unwrap();
        assert!(conv2d_backward(&input, k, &[0.0; 27], &bad_grad).is_err());
    }

    #[test]
    fn deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Shape4::new(2, 8, 8, 3);
        let k = ConvShape::square(3, 3, 4);
        let input = Tensor4::from_vec(s, random(&mut rng, s.len()).into_iter().map(|v| v as f32).collect()).unwrap();
        let w: Vec<f32> = random(&mut rng, k.weight_len()).into_iter().map(|v| v as f32).collect();
        let a = conv2d_forward(&input, k, &w, &[0.0; 4]).unwrap();
        let b = conv2d_forward(&input, k, &w, &[0.0; 4]).unwrap();
        assert_eq!(a.data(), b.data());
    }
}
