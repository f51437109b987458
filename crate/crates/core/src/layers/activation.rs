//! Elementwise activations. Backward passes take the stored forward output.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4};

pub fn relu_forward<T: Scalar>(input: &Tensor4<T>) -> Tensor4<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Subgradient at exactly 0 is 0.
pub fn relu_backward<T: Scalar>(output: &Tensor4<T>, d_output: &Tensor4<T>) -> Result<Tensor4<T>> {
    zip_grad("relu_backward", output, d_output, |y, g| if y > T::zero() { g } else { T::zero() })
}

#[inline]
pub fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

pub fn sigmoid_forward<T: Scalar>(input: &Tensor4<T>) -> Tensor4<T> {
    input.map(sigmoid)
}

pub fn sigmoid_backward<T: Scalar>(output: &Tensor4<T>, d_output: &Tensor4<T>) -> Result<Tensor4<T>> {
    zip_grad("sigmoid_backward", output, d_output, |y, g| g * y * (T::one() - y))
}

fn zip_grad<T: Scalar>(
    op: &'static str,
    output: &Tensor4<T>,
    d_output: &Tensor4<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor4<T>> {
    if output.shape() != d_output.shape() {
        return Err(Error::shape(op, output.shape(), d_output.shape()));
    }
    let data = output.data().iter().zip(d_output.data()).map(|(&y, &g)| f(y, g)).collect();
    Tensor4::from_vec(output.shape(), data)
}
