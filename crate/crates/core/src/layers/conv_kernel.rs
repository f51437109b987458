//! Direct same-padded convolution loops.
//!
//! The portable loops below serve every scalar type. For `f32` on x86-64
//! machines with AVX2 and FMA, a hand-vectorised kernel is selected at
//! runtime: output channels go eight to a register, and four neighbouring
//! pixels are accumulated together so the FMA chains stay independent. Each
//! path has a fixed accumulation order, so results are reproducible on a given
//! machine.

use std::any::TypeId;

use super::conv::ConvShape;
use crate::tensor::{Scalar, Shape4};

/// Valid kernel offsets `[lo, hi)` along one axis for output coordinate `o`.
#[inline(always)]
fn tap_range(o: usize, k: usize, extent: usize) -> (usize, usize) {
    let p = k / 2;
    (p.saturating_sub(o), k.min(extent + p - o))
}

fn forward_portable<T: Scalar>(input: &[T], s: Shape4, k: ConvShape, weights: &[T], bias: &[T], out: &mut [T]) {
    let (ci, co) = (k.c_in, k.c_out);
    let (ph, pw) = (k.kh / 2, k.kw / 2);
    for n in 0..s.n {
        for y in 0..s.h {
            let (ky0, ky1) = tap_range(y, k.kh, s.h);
            for x in 0..s.w {
                let (kx0, kx1) = tap_range(x, k.kw, s.w);
                let o = &mut out[((n * s.h + y) * s.w + x) * co..][..co];
                o.copy_from_slice(bias);
                for ky in ky0..ky1 {
                    for kx in kx0..kx1 {
                        let src = ((n * s.h + y + ky - ph) * s.w + x + kx - pw) * ci;
                        let wt = &weights[(ky * k.kw + kx) * ci * co..][..ci * co];
                        for (&xv, wr) in input[src..src + ci].iter().zip(wt.chunks_exact(co)) {
                            for (a, &wv) in o.iter_mut().zip(wr) {
                                *a += xv * wv;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn weight_grad_portable<T: Scalar>(input: &[T], s: Shape4, k: ConvShape, d_out: &[T], d_w: &mut [T]) {
    let (ci, co) = (k.c_in, k.c_out);
    let (ph, pw) = (k.kh / 2, k.kw / 2);
    for n in 0..s.n {
        for y in 0..s.h {
            let (ky0, ky1) = tap_range(y, k.kh, s.h);
            for x in 0..s.w {
                let (kx0, kx1) = tap_range(x, k.kw, s.w);
                let g = &d_out[((n * s.h + y) * s.w + x) * co..][..co];
                for ky in ky0..ky1 {
                    for kx in kx0..kx1 {
                        let src = ((n * s.h + y + ky - ph) * s.w + x + kx - pw) * ci;
                        let dw = &mut d_w[(ky * k.kw + kx) * ci * co..][..ci * co];
                        for (&xv, row) in input[src..src + ci].iter().zip(dw.chunks_exact_mut(co)) {
                            for (r, &gv) in row.iter_mut().zip(g) {
                                *r += xv * gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;

    use super::{tap_range, ConvShape, Shape4};

    pub(super) fn available() -> bool {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    }

    /// Lane mask selecting the first `min(8, rem)` lanes.
    #[inline(always)]
    unsafe fn lane_mask(rem: usize) -> __m256i {
        let r = rem.min(8) as i32;
        _mm256_setr_epi32(
            -((r > 0) as i32),
            -((r > 1) as i32),
            -((r > 2) as i32),
            -((r > 3) as i32),
            -((r > 4) as i32),
            -((r > 5) as i32),
            -((r > 6) as i32),
            -((r > 7) as i32),
        )
    }

    /// SAFETY: caller guarantees AVX2+FMA and slice lengths matching `s`/`k`.
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn forward(
        input: &[f32],
        s: Shape4,
        k: ConvShape,
        weights: &[f32],
        bias: &[f32],
        out: &mut [f32],
    ) {
        let (ci, co) = (k.c_in, k.c_out);
        let (ph, pw) = (k.kh / 2, k.kw / 2);
        let (inp, w, b, o) = (input.as_ptr(), weights.as_ptr(), bias.as_ptr(), out.as_mut_ptr());
        let tap_stride = ci * co;
        for n in 0..s.n {
            for y in 0..s.h {
                let (ky0, ky1) = tap_range(y, k.kh, s.h);
                let row_base = (n * s.h + y) * s.w;
                let mut x = 0;
                while x < s.w {
                    let quad = x >= pw && x + 4 + pw <= s.w;
                    for cb in (0..co).step_by(8) {
                        let mask = lane_mask(co - cb);
                        let full = co - cb >= 8;
                        let bv = _mm256_maskload_ps(b.add(cb), mask);
                        if quad {
                            let (mut a0, mut a1, mut a2, mut a3) = (bv, bv, bv, bv);
                            for ky in ky0..ky1 {
                                for kx in 0..k.kw {
                                    let xp = inp.add(((n * s.h + y + ky - ph) * s.w + x + kx - pw) * ci);
                                    let wp = w.add((ky * k.kw + kx) * tap_stride + cb);
                                    for i in 0..ci {
                                        let wv = if full {
                                            _mm256_loadu_ps(wp.add(i * co))
                                        } else {
                                            _mm256_maskload_ps(wp.add(i * co), mask)
                                        };
                                        a0 = _mm256_fmadd_ps(_mm256_set1_ps(*xp.add(i)), wv, a0);
                                        a1 = _mm256_fmadd_ps(_mm256_set1_ps(*xp.add(ci + i)), wv, a1);
                                        a2 = _mm256_fmadd_ps(_mm256_set1_ps(*xp.add(2 * ci + i)), wv, a2);
                                        a3 = _mm256_fmadd_ps(_mm256_set1_ps(*xp.add(3 * ci + i)), wv, a3);
                                    }
                                }
                            }
                            let op = o.add((row_base + x) * co + cb);
                            _mm256_maskstore_ps(op, mask, a0);
                            _mm256_maskstore_ps(op.add(co), mask, a1);
                            _mm256_maskstore_ps(op.add(2 * co), mask, a2);
                            _mm256_maskstore_ps(op.add(3 * co), mask, a3);
                        } else {
                            let (kx0, kx1) = tap_range(x, k.kw, s.w);
                            let mut a = bv;
                            for ky in ky0..ky1 {
                                for kx in kx0..kx1 {
                                    let xp = inp.add(((n * s.h + y + ky - ph) * s.w + x + kx - pw) * ci);
                                    let wp = w.add((ky * k.kw + kx) * tap_stride + cb);
                                    for i in 0..ci {
                                        let wv = _mm256_maskload_ps(wp.add(i * co), mask);
                                        a = _mm256_fmadd_ps(_mm256_set1_ps(*xp.add(i)), wv, a);
                                    }
                                }
                            }
                            _mm256_maskstore_ps(o.add((row_base + x) * co + cb), mask, a);
                        }
                    }
                    x += if quad { 4 } else { 1 };
                }
            }
        }
    }

    /// SAFETY: as for [`forward`].
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn weight_grad(input: &[f32], s: Shape4, k: ConvShape, d_out: &[f32], d_w: &mut [f32]) {
        let ci = k.c_in;
        let mut i = 0;
        while i < ci {
            match ci - i {
                r if r >= 8 => wg_rows::<8>(input, s, k, d_out, d_w, i),
                7 => wg_rows::<7>(input, s, k, d_out, d_w, i),
                6 => wg_rows::<6>(input, s, k, d_out, d_w, i),
                5 => wg_rows::<5>(input, s, k, d_out, d_w, i),
                4 => wg_rows::<4>(input, s, k, d_out, d_w, i),
                3 => wg_rows::<3>(input, s, k, d_out, d_w, i),
                2 => wg_rows::<2>(input, s, k, d_out, d_w, i),
                _ => wg_rows::<1>(input, s, k, d_out, d_w, i),
            }
            i += 8;
        }
    }

    /// Accumulates weight-gradient rows `i0..i0+R` for every tap, sharing each
    /// output-gradient load across the `R` input channels.
    #[target_feature(enable = "avx2,fma")]
    unsafe fn wg_rows<const R: usize>(
        input: &[f32],
        s: Shape4,
        k: ConvShape,
        d_out: &[f32],
        d_w: &mut [f32],
        i0: usize,
    ) {
        let (ci, co) = (k.c_in, k.c_out);
        let (ph, pw) = (k.kh / 2, k.kw / 2);
        let (inp, g) = (input.as_ptr(), d_out.as_ptr());
        for ky in 0..k.kh {
            let (y0, y1) = (ph.saturating_sub(ky), (s.h + ph - ky).min(s.h));
            for kx in 0..k.kw {
                let (x0, x1) = (pw.saturating_sub(kx), (s.w + pw - kx).min(s.w));
                let dw = d_w.as_mut_ptr().add((ky * k.kw + kx) * ci * co);
                for cb in (0..co).step_by(8) {
                    let mask = lane_mask(co - cb);
                    let full = co - cb >= 8;
                    let mut acc = [_mm256_setzero_ps(); R];
                    for n in 0..s.n {
                        for y in y0..y1 {
                            let gp = g.add((n * s.h + y) * s.w * co + cb);
                            // Column x of this row reads input column x + kx - pw.
                            let xp = inp.add((n * s.h + y + ky - ph) * s.w * ci + i0);
                            for x in x0..x1 {
                                let gv = if full {
                                    _mm256_loadu_ps(gp.add(x * co))
                                } else {
                                    _mm256_maskload_ps(gp.add(x * co), mask)
                                };
                                let xr = xp.add((x + kx - pw) * ci);
                                for (j, a) in acc.iter_mut().enumerate() {
                                    *a = _mm256_fmadd_ps(_mm256_set1_ps(*xr.add(j)), gv, *a);
                                }
                            }
                        }
                    }
                    for (j, a) in acc.iter().enumerate() {
                        let p = dw.add((i0 + j) * co + cb);
                        _mm256_maskstore_ps(p, mask, _mm256_add_ps(_mm256_maskload_ps(p, mask), *a));
                    }
                }
            }
        }
    }
}

/// Reinterprets `&[T]` as `&[f32]` when `T` is `f32`.
#[cfg(target_arch = "x86_64")]
fn as_f32<T: Scalar>(v: &[T]) -> Option<&[f32]> {
    // SAFETY: the TypeId check proves T == f32.
    (TypeId::of::<T>() == TypeId::of::<f32>()).then(|| unsafe { &*(v as *const [T] as *const [f32]) })
}

#[cfg(target_arch = "x86_64")]
fn as_f32_mut<T: Scalar>(v: &mut [T]) -> Option<&mut [f32]> {
    // SAFETY: the TypeId check proves T == f32.
    (TypeId::of::<T>() == TypeId::of::<f32>()).then(|| unsafe { &mut *(v as *mut [T] as *mut [f32]) })
}

fn use_avx<T: Scalar>() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        TypeId::of::<T>() == TypeId::of::<f32>() && avx::available()
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// `out = conv(input, weights) + bias`, overwriting `out`.
pub(crate) fn forward<T: Scalar>(input: &[T], s: Shape4, k: ConvShape, weights: &[T], bias: &[T], out: &mut [T]) {
    assert!(input.len() == s.len() && out.len() == s.with_c(k.c_out).len());
    assert!(weights.len() == k.weight_len() && bias.len() == k.c_out);
    #[cfg(target_arch = "x86_64")]
    if use_avx::<T>() {
        let (i, w, b) = (as_f32(input).unwrap(), as_f32(weights).unwrap(), as_f32(bias).unwrap());
        // SAFETY: features detected above; lengths asserted.
        unsafe { avx::forward(i, s, k, w, b, as_f32_mut(out).unwrap()) };
        return;
    }
    forward_portable(input, s, k, weights, bias, out)
}

/// `d_w += ∂L/∂W` for upstream gradient `d_out`.
pub(crate) fn weight_grad<T: Scalar>(input: &[T], s: Shape4, k: ConvShape, d_out: &[T], d_w: &mut [T]) {
    assert!(input.len() == s.len() && d_out.len() == s.with_c(k.c_out).len());
    assert!(d_w.len() == k.weight_len());
    #[cfg(target_arch = "x86_64")]
    if use_avx::<T>() {
        let (i, g) = (as_f32(input).unwrap(), as_f32(d_out).unwrap());
        // SAFETY: features detected above; lengths asserted.
        unsafe { avx::weight_grad(i, s, k, g, as_f32_mut(d_w).unwrap()) };
        return;
    }
    weight_grad_portable(input, s, k, d_out, d_w)
}

/// Kernel of the input-gradient convolution: spatially flipped, with the
/// channel roles swapped, so `d_input = conv(d_output, flipped)`.
pub(crate) fn flip_transpose<T: Scalar>(k: ConvShape, weights: &[T]) -> (ConvShape, Vec<T>) {
    let (ci, co) = (k.c_in, k.c_out);
    let mut out = vec![T::zero(); weights.len()];
    for ky in 0..k.kh {
        for kx in 0..k.kw {
            let src = (ky * k.kw + kx) * ci * co;
            let dst = ((k.kh - 1 - ky) * k.kw + (k.kw - 1 - kx)) * co * ci;
            for i in 0..ci {
                for o in 0..co {
                    out[dst + o * ci + i] = weights[src + i * co + o];
                }
            }
        }
    }
    (ConvShape::new(k.kh, k.kw, co, ci), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// The vectorised f32 path agrees with the portable loops run in f64.
    #[test]
    fn fast_path_matches_portable() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (h, w, ci, co, kk) in
            [(7, 9, 3, 8, 3), (8, 8, 5, 11, 3), (5, 12, 2, 3, 1), (6, 6, 4, 17, 5), (3, 3, 2, 1, 3)]
        {
            let s = Shape4::new(2, h, w, ci);
            let k = ConvShape::square(kk, ci, co);
            let x: Vec<f32> = (0..s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let wt: Vec<f32> = (0..k.weight_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f32> = (0..co).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f32> = (0..s.with_c(co).len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let up = |v: &[f32]| v.iter().map(|&a| a as f64).collect::<Vec<_>>();

            let mut fast = vec![0.0f32; s.with_c(co).len()];
            forward(&x, s, k, &wt, &b, &mut fast);
            let mut slow = vec![0.0f64; fast.len()];
            forward_portable(&up(&x), s, k, &up(&wt), &up(&b), &mut slow);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((*a as f64 - b).abs() < 1e-4, "forward {a} vs {b}");
            }

            let mut fast = vec![0.0f32; k.weight_len()];
            weight_grad(&x, s, k, &g, &mut fast);
            let mut slow = vec![0.0f64; fast.len()];
            weight_grad_portable(&up(&x), s, k, &up(&g), &mut slow);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((*a as f64 - b).abs() < 1e-4, "weight grad {a} vs {b}");
            }
        }
    }
}
