//! Channel concatenation for skip connections.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4};

/// Stacks `a`'s channels then `b`'s at every pixel.
pub fn concat_channels<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    let (sa, sb) = (a.shape(), b.shape());
    if (sa.n, sa.h, sa.w) != (sb.n, sb.h, sb.w) {
        return Err(Error::shape("concat_channels", sa.with_c(sb.c), sb));
    }
    let mut out = Vec::with_capacity(sa.len() + sb.len());
    for (pa, pb) in a.data().chunks_exact(sa.c).zip(b.data().chunks_exact(sb.c)) {
        out.extend_from_slice(pa);
        out.extend_from_slice(pb);
    }
    Tensor4::from_vec(sa.with_c(sa.c + sb.c), out)
}

/// Splits a gradient at channel `c_a`, inverse of [`concat_channels`].
pub fn split_channels<T: Scalar>(d_output: &Tensor4<T>, c_a: usize) -> Result<(Tensor4<T>, Tensor4<T>)> {
    let s = d_output.shape();
    if c_a == 0 || c_a >= s.c {
        return Err(Error::InvalidArgument(format!("split point {c_a} must lie strictly inside {} channels", s.c)));
    }
    let c_b = s.c - c_a;
    let mut a = Vec::with_capacity(s.len() / s.c * c_a);
    let mut b = Vec::with_capacity(s.len() / s.c * c_b);
    for px in d_output.data().chunks_exact(s.c) {
        a.extend_from_slice(&px[..c_a]);
        b.extend_from_slice(&px[c_a..]);
    }
    Ok((Tensor4::from_vec(s.with_c(c_a), a)?, Tensor4::from_vec(s.with_c(c_b), b)?))
}
