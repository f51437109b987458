//! Fully connected layer on `(n, 1, 1, d)` tensors.

use crate::error::{Error, Result};
use crate::tensor::{LayerGrads, Scalar, Shape4, Tensor4};

fn check_input<T: Scalar>(op: &'static str, input: &Tensor4<T>, d_in: usize) -> Result<()> {
    let s = input.shape();
    if s.h != 1 || s.w != 1 || s.c != d_in {
        return Err(Error::shape(op, format!("(n, 1, 1, {d_in})"), s));
    }
    Ok(())
}

/// `weights` is `(d_in, d_out)` row-major.
pub fn dense_forward<T: Scalar>(
    input: &Tensor4<T>,
    d_in: usize,
    d_out: usize,
    weights: &[T],
    bias: &[T],
) -> Result<Tensor4<T>> {
    check_input("dense_forward", input, d_in)?;
    if weights.len() != d_in * d_out || bias.len() != d_out {
        return Err(Error::shape(
            "dense_forward",
            format!("{} weights + {d_out} biases", d_in * d_out),
            format!("{} weights + {} biases", weights.len(), bias.len()),
        ));
    }
    let n = input.shape().n;
    let mut out = Vec::with_capacity(n * d_out);
    for row in input.data().chunks_exact(d_in) {
        let mut acc = bias.to_vec();
        for (&x, w_row) in row.iter().zip(weights.chunks_exact(d_out)) {
            for (a, &w) in acc.iter_mut().zip(w_row) {
                *a += x * w;
            }
        }
        out.extend(acc);
    }
    Tensor4::from_vec(Shape4::new(n, 1, 1, d_out), out)
}

/// `d_params = [d_weights (d_in, d_out) | d_bias (d_out)]`.
pub fn dense_backward<T: Scalar>(
    input: &Tensor4<T>,
    d_in: usize,
    d_out: usize,
    weights: &[T],
    d_output: &Tensor4<T>,
) -> Result<LayerGrads<T>> {
    check_input("dense_backward", input, d_in)?;
    let n = input.shape().n;
    if d_output.shape() != Shape4::new(n, 1, 1, d_out) || weights.len() != d_in * d_out {
        return Err(Error::shape("dense_backward", Shape4::new(n, 1, 1, d_out), d_output.shape()));
    }
    let mut d_params = vec![T::zero(); d_in * d_out + d_out];
    let mut d_input = vec![T::zero(); n * d_in];
    let (d_w, d_b) = d_params.split_at_mut(d_in * d_out);
    for ((x_row, g_row), dx_row) in
        input.data().chunks_exact(d_in).zip(d_output.data().chunks_exact(d_out)).zip(d_input.chunks_exact_mut(d_in))
    {
        for (b, &g) in d_b.iter_mut().zip(g_row) {
            *b += g;
        }
        for (i, (&x, dx)) in x_row.iter().zip(dx_row.iter_mut()).enumerate() {
            let w_row = &weights[i * d_out..(i + 1) * d_out];
            let dw_row = &mut d_w[i * d_out..(i + 1) * d_out];
            let mut acc = T::zero();
            for ((dw, &w), &g) in dw_row.iter_mut().zip(w_row).zip(g_row) {
                *dw += x * g;
                acc += w * g;
            }
            *dx = acc;
        }
    }
    Ok(LayerGrads { d_input: Tensor4::from_vec(input.shape(), d_input)?, d_params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_and_zero_input() {
        let x = Tensor4::from_vec(Shape4::new(2, 1, 1, 3), vec![1.0f32, -2.0, 3.0, 0.5, 0.25, -1.0]).unwrap();
        let eye = [1.0f32, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(dense_forward(&x, 3, 3, &eye, &[0.0; 3]).unwrap(), x);

        let z = Tensor4::<f32>::zeros(Shape4::new(2, 1, 1, 3)).unwrap();
        let out = dense_forward(&z, 3, 2, &[0.7; 6], &[0.5, -0.5]).unwrap();
        assert_eq!(out.data(), &[0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn rejects_mismatch() {
        let x = Tensor4::<f32>::zeros(Shape4::new(1, 1, 1, 3)).unwrap();
        assert!(dense_forward(&x, 4, 2, &[0.0; 8], &[0.0; 2]).is_err());
        assert!(dense_forward(&x, 3, 2, &[0.0; 5], &[0.0; 2]).is_err());
        let spatial = Tensor4::<f32>::zeros(Shape4::new(1, 2, 2, 3)).unwrap();
        assert!(dense_forward(&spatial, 3, 2, &[0.0; 6], &[0.0; 2]).is_err());
    }
}
