//! The full per-op suite plus end-to-end U-Net spot checks, all in f64.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_difference_check, FdOptions, GradCheckReport};
use crate::layers::*;
use crate::segnet::loss::soft_iou_loss;
use crate::segnet::se::{se_attention_backward, se_attention_forward, SeParams};
use crate::segnet::{UNetConfig, UNetModel};
use crate::tensor::{Shape4, Tensor4};

#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub fd: FdOptions,
    /// Parameters sampled per end-to-end model.
    pub e2e_params: usize,
    pub e2e_tolerance: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 0, fd: FdOptions::default(), e2e_params: 24, e2e_tolerance: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub name: String,
    pub report: GradCheckReport,
}

type T4 = Tensor4<f64>;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn tensor(shape: Shape4, data: &[f64]) -> T4 {
    Tensor4::from_vec(shape, data.to_vec()).expect("suite shapes are consistent")
}

/// Values at least 0.02 apart and 0.01 away from zero, in random order.
fn kink_free(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let mag = 0.01 + 0.02 * (i / 2) as f64 + rng.random_range(0.0..0.005);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    use rand::seq::SliceRandom;
    v.shuffle(rng);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks `f` where `f(x)` returns `(loss, ∂loss/∂x)`.
fn check(
    out: &mut Vec<SuiteEntry>,
    name: &str,
    point: &[f64],
    opts: FdOptions,
    coords: Option<&[usize]>,
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
) {
    let analytic = f(point).1;
    let report = finite_difference_check(|x| f(x).0, point, &analytic, opts, coords);
    out.push(SuiteEntry { name: name.to_string(), report });
}

fn conv_entries(out: &mut Vec<SuiteEntry>, rng: &mut ChaCha8Rng, fd: FdOptions, kernel: usize) {
    let s = Shape4::new(2, 5, 4, 3);
    let k = ConvShape::square(kernel, 3, 2);
    let x = uniform(rng, s.len(), -1.0, 1.0);
    let w = uniform(rng, k.weight_len(), -0.5, 0.5);
    let b = uniform(rng, k.c_out, -0.5, 0.5);
    let r = uniform(rng, s.with_c(k.c_out).len(), -1.0, 1.0);
    let loss = |x: &T4, w: &[f64], b: &[f64]| dot(conv2d_forward(x, k, w, b).unwrap().data(), &r);
    let upstream = tensor(s.with_c(k.c_out), &r);
    check(out, &format!("conv2d_{kernel}x{kernel}.input"), &x, fd, None, |xs| {
        let xt = tensor(s, xs);
        let g = conv2d_backward(&xt, k, &w, &upstream).unwrap();
        (loss(&xt, &w, &b), g.d_input.into_vec())
    });
    let xt = tensor(s, &x);
    let wb: Vec<f64> = w.iter().chain(&b).copied().collect();
    check(out, &format!("conv2d_{kernel}x{kernel}.params"), &wb, fd, None, |p| {
        let (w, b) = p.split_at(k.weight_len());
        let g = conv2d_backward(&xt, k, w, &upstream).unwrap();
        (loss(&xt, w, b), g.d_params)
    });
}

fn shape_op(
    out: &mut Vec<SuiteEntry>,
    name: &str,
    point: &[f64],
    in_shape: Shape4,
    out_shape: Shape4,
    r: &[f64],
    fd: FdOptions,
    fwd: impl Fn(&T4) -> T4,
    bwd: impl Fn(&T4, &T4, &T4) -> T4,
) {
    let upstream = tensor(out_shape, r);
    check(out, name, point, fd, None, |xs| {
        let x = tensor(in_shape, xs);
        let y = fwd(&x);
        (dot(y.data(), r), bwd(&x, &y, &upstream).into_vec())
    });
}

/// Runs every layer check and the end-to-end U-Net checks.
pub fn run_suite(opts: &SuiteOptions) -> Vec<SuiteEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let fd = opts.fd;
    let mut out = Vec::new();

    conv_entries(&mut out, &mut rng, fd, 3);
    conv_entries(&mut out, &mut rng, fd, 1);

    let s = Shape4::new(2, 4, 6, 3);
    let half = Shape4::new(2, 2, 3, 3);
    let x = kink_free(&mut rng, s.len());
    let r = uniform(&mut rng, half.len(), -1.0, 1.0);
    shape_op(
        &mut out,
        "maxpool2",
        &x,
        s,
        half,
        &r,
        fd,
        |x| maxpool2_forward(x).unwrap().0,
        |x, _, d| {
            let rec = maxpool2_forward(x).unwrap().1;
            maxpool2_backward(&rec, d).unwrap()
        },
    );

    let x = uniform(&mut rng, half.len(), -1.0, 1.0);
    let r = uniform(&mut rng, s.len(), -1.0, 1.0);
    shape_op(
        &mut out,
        "upsample2",
        &x,
        half,
        s,
        &r,
        fd,
        |x| upsample2_forward(x).unwrap(),
        |_, _, d| upsample2_backward(d).unwrap(),
    );

    let x = kink_free(&mut rng, s.len());
    let r = uniform(&mut rng, s.len(), -1.0, 1.0);
    shape_op(&mut out, "relu", &x, s, s, &r, fd, relu_forward, |_, y, d| relu_backward(y, d).unwrap());
    let x = uniform(&mut rng, s.len(), -3.0, 3.0);
    shape_op(&mut out, "sigmoid", &x, s, s, &r, fd, sigmoid_forward, |_, y, d| sigmoid_backward(y, d).unwrap());

    let pooled = Shape4::new(2, 1, 1, 3);
    let x = uniform(&mut rng, s.len(), -1.0, 1.0);
    let r = uniform(&mut rng, pooled.len(), -1.0, 1.0);
    shape_op(
        &mut out,
        "global_avg_pool",
        &x,
        s,
        pooled,
        &r,
        fd,
        |x| global_avg_pool_forward(x).unwrap(),
        |x, _, d| global_avg_pool_backward(x.shape(), d).unwrap(),
    );

    let (d_in, d_out) = (4, 3);
    let ds = Shape4::new(3, 1, 1, d_in);
    let x = uniform(&mut rng, ds.len(), -1.0, 1.0);
    let w = uniform(&mut rng, d_in * d_out, -1.0, 1.0);
    let b = uniform(&mut rng, d_out, -1.0, 1.0);
    let r = uniform(&mut rng, 3 * d_out, -1.0, 1.0);
    let upstream = tensor(Shape4::new(3, 1, 1, d_out), &r);
    check(&mut out, "dense.input", &x, fd, None, |xs| {
        let xt = tensor(ds, xs);
        let y = dense_forward(&xt, d_in, d_out, &w, &b).unwrap();
        let g = dense_backward(&xt, d_in, d_out, &w, &upstream).unwrap();
        (dot(y.data(), &r), g.d_input.into_vec())
    });
    let xt = tensor(ds, &x);
    let wb: Vec<f64> = w.iter().chain(&b).copied().collect();
    check(&mut out, "dense.params", &wb, fd, None, |p| {
        let (w, b) = p.split_at(d_in * d_out);
        let y = dense_forward(&xt, d_in, d_out, w, b).unwrap();
        let g = dense_backward(&xt, d_in, d_out, w, &upstream).unwrap();
        (dot(y.data(), &r), g.d_params)
    });

    let sa = Shape4::new(2, 3, 3, 2);
    let sb = Shape4::new(2, 3, 3, 3);
    let ab = uniform(&mut rng, sa.len() + sb.len(), -1.0, 1.0);
    let r = uniform(&mut rng, sa.with_c(5).len(), -1.0, 1.0);
    let upstream = tensor(sa.with_c(5), &r);
    check(&mut out, "concat_channels", &ab, fd, None, |p| {
        let (a, b) = p.split_at(sa.len());
        let y = concat_channels(&tensor(sa, a), &tensor(sb, b)).unwrap();
        let (da, db) = split_channels(&upstream, 2).unwrap();
        let mut g = da.into_vec();
        g.extend(db.into_vec());
        (dot(y.data(), &r), g)
    });

    se_entries(&mut out, &mut rng, fd);

    let ps = Shape4::new(2, 3, 3, 1);
    let p = uniform(&mut rng, ps.len(), 0.05, 0.95);
    let t: Vec<f64> = (0..ps.len()).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
    let target = tensor(ps, &t);
    check(&mut out, "soft_iou_loss", &p, fd, None, |ps_| {
        let (l, g) = soft_iou_loss(&tensor(ps, ps_), &target, 1.0).unwrap();
        (l, g.into_vec())
    });

    for attention in [false, true] {
        unet_entries(&mut out, &mut rng, opts, attention);
    }
    out
}

fn se_entries(out: &mut Vec<SuiteEntry>, rng: &mut ChaCha8Rng, fd: FdOptions) {
    let (c, h) = (4, 2);
    let s = Shape4::new(2, 3, 3, c);
    let x = uniform(rng, s.len(), -1.0, 1.0);
    let sizes = [c * h, h, h * c, c];
    let params = uniform(rng, sizes.iter().sum(), -1.0, 1.0);
    let r = uniform(rng, s.len(), -1.0, 1.0);
    let upstream = tensor(s, &r);
    let split = |p: &[f64]| -> [Vec<f64>; 4] {
        let mut it = p;
        sizes.map(|n| {
            let (a, b) = it.split_at(n);
            it = b;
            a.to_vec()
        })
    };
    let run = |x: &T4, p: &[f64]| {
        let [w1, b1, w2, b2] = split(p);
        let sp = SeParams { channels: c, hidden: h, w1: &w1, b1: &b1, w2: &w2, b2: &b2 };
        let (y, cache) = se_attention_forward(x, sp).unwrap();
        let g = se_attention_backward(&cache, sp, &upstream).unwrap();
        (dot(y.data(), &r), g)
    };
    check(out, "se_attention.input", &x, fd, None, |xs| {
        let (l, g) = run(&tensor(s, xs), &params);
        (l, g.d_input.into_vec())
    });
    let xt = tensor(s, &x);
    check(out, "se_attention.params", &params, fd, None, |p| {
        let (l, g) = run(&xt, p);
        (l, [g.d_w1, g.d_b1, g.d_w2, g.d_b2].concat())
    });
}

fn unet_entries(out: &mut Vec<SuiteEntry>, rng: &mut ChaCha8Rng, opts: &SuiteOptions, attention: bool) {
    let bands = 3;
    let config = UNetConfig::new(bands).with_base_filters(4).with_attention(attention).with_seed(rng.random());
    let model = UNetModel::<f64>::new(config.clone()).unwrap();
    let s = Shape4::new(2, 8, 8, bands);
    let x = tensor(s, &uniform(rng, s.len(), -1.0, 1.0));
    let t: Vec<f64> = (0..s.with_c(1).len()).map(|_| f64::from(rng.random_bool(0.4) as u8)).collect();
    let target = tensor(s.with_c(1), &t);
    let tag = if attention { "unet_attention" } else { "unet" };
    let fd = FdOptions { step: opts.fd.step, tolerance: opts.e2e_tolerance };

    // Flat view over every parameter tensor.
    let flat: Vec<f64> = model.params().concat();
    let offsets: Vec<usize> = model
        .params()
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.len();
            Some(o)
        })
        .collect();
    let rebuild = |flat: &[f64]| {
        let params = model.params().iter().zip(&offsets).map(|(p, &o)| flat[o..o + p.len()].to_vec()).collect();
        UNetModel::<f64>::from_params(config.clone(), params).unwrap()
    };
    let eval = |m: &UNetModel<f64>, x: &T4| {
        let (y, cache) = m.forward(x).unwrap();
        let (loss, d) = soft_iou_loss(&y, &target, 1.0).unwrap();
        (loss, m.backward(&cache, &d).unwrap())
    };
    let coords = sample(rng, flat.len(), opts.e2e_params.min(flat.len())).into_vec();
    check(out, &format!("{tag}.params"), &flat, fd, Some(&coords), |p| {
        let (l, g) = eval(&rebuild(p), &x);
        (l, g.params.concat())
    });
    let coords = sample(rng, s.len(), opts.e2e_params.min(s.len())).into_vec();
    check(out, &format!("{tag}.input"), x.data(), fd, Some(&coords), |xs| {
        let (l, g) = eval(&model, &tensor(s, xs));
        (l, g.d_input.into_vec())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_suite_passes() {
        let entries = run_suite(&SuiteOptions::default());
        for name in ["conv2d_3x3.params", "maxpool2", "se_attention.params", "soft_iou_loss", "unet_attention.params"] {
            assert!(entries.iter().any(|e| e.name == name), "{name} missing");
        }
        for e in &entries {
            assert!(e.report.passed(), "{}: {:?}", e.name, e.report);
        }
        let layer_max =
            entries.iter().filter(|e| !e.name.starts_with("unet")).map(|e| e.report.max_rel_error).fold(0.0, f64::max);
        assert!(layer_max < 1e-4);
    }
}
