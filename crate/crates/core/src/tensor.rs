//! Dense rank-4 tensors in `(n, h, w, c)` row-major order.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};

/// Floating point element type. Training runs in `f32`; the gradient checks
/// re-run every op in `f64`.
pub trait Scalar:
    Copy
    + Default
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Float
    + 'static
{
    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Tensor dimensions: batch, height, width, channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape4 {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape4 {
    pub const fn new(n: usize, h: usize, w: usize, c: usize) -> Self {
        Self { n, h, w, c }
    }

    pub fn len(&self) -> usize {
        self.n * self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, n: usize, y: usize, x: usize, c: usize) -> usize {
        ((n * self.h + y) * self.w + x) * self.c + c
    }

    pub fn with_c(self, c: usize) -> Self {
        Self { c, ..self }
    }
}

impl fmt::Display for Shape4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.h, self.w, self.c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<T = f32> {
    shape: Shape4,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(shape: Shape4) -> Result<Self> {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: Shape4, value: T) -> Result<Self> {
        check_dims(shape)?;
        Ok(Self { shape, data: vec![value; shape.len()] })
    }

    pub fn from_vec(shape: Shape4, data: Vec<T>) -> Result<Self> {
        check_dims(shape)?;
        if data.len() != shape.len() {
            return Err(Error::shape(
                "Tensor4::from_vec",
                format!("{} elements for {shape}", shape.len()),
                format!("{} elements", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    /// Builds a tensor from a closure over `(n, y, x, c)`.
    pub fn from_fn(shape: Shape4, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Result<Self> {
        check_dims(shape)?;
        let mut data = Vec::with_capacity(shape.len());
        for n in 0..shape.n {
            for y in 0..shape.h {
                for x in 0..shape.w {
                    for c in 0..shape.c {
                        data.push(f(n, y, x, c));
                    }
                }
            }
        }
        Ok(Self { shape, data })
    }

    #[inline]
    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, n: usize, y: usize, x: usize, c: usize) -> T {
        self.data[self.shape.index(n, y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, y: usize, x: usize, c: usize, v: T) {
        let i = self.shape.index(n, y, x, c);
        self.data[i] = v;
    }

    /// Channel vector at one pixel.
    #[inline]
    pub fn pixel(&self, n: usize, y: usize, x: usize) -> &[T] {
        let start = self.shape.index(n, y, x, 0);
        &self.data[start..start + self.shape.c]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Copies sample `i` out of the batch as a `(1, h, w, c)` tensor.
    pub fn sample(&self, i: usize) -> Result<Self> {
        if i >= self.shape.n {
            return Err(Error::InvalidArgument(format!("sample {i} out of range for batch of {}", self.shape.n)));
        }
        let per = self.shape.h * self.shape.w * self.shape.c;
        Ok(Self { shape: Shape4 { n: 1, ..self.shape }, data: self.data[i * per..(i + 1) * per].to_vec() })
    }

    /// Stacks single samples (all of identical `(h, w, c)`) into one batch.
    pub fn stack(samples: &[&Self]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::InvalidArgument("cannot stack zero tensors".into()))?;
        let s = first.shape;
        let mut data = Vec::with_capacity(s.len() * samples.len());
        let mut n = 0;
        for t in samples {
            if (t.shape.h, t.shape.w, t.shape.c) != (s.h, s.w, s.c) {
                return Err(Error::shape("Tensor4::stack", s, t.shape));
            }
            data.extend_from_slice(&t.data);
            n += t.shape.n;
        }
        Ok(Self { shape: Shape4 { n, ..s }, data })
    }

    pub fn cast<U: Scalar>(&self) -> Tensor4<U> {
        Tensor4 { shape: self.shape, data: self.data.iter().map(|v| U::of_f64(v.as_f64())).collect() }
    }
}

fn check_dims(shape: Shape4) -> Result<()> {
    if shape.n == 0 || shape.h == 0 || shape.w == 0 || shape.c == 0 {
        return Err(Error::InvalidArgument(format!("tensor dimensions must all be >= 1, got {shape}")));
    }
    Ok(())
}

/// Gradients returned by a layer backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads<T = f32> {
    pub d_input: Tensor4<T>,
    /// Parameter gradients in the layer's own parameter layout.
    pub d_params: Vec<T>,
}
