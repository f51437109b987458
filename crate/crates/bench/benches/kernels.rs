use std::collections::HashSet;
use std::hint::black_box;

use bandsel_bench::{random_observations, random_tensor, random_vec};
use bandsel_core::gp::{propose_next, GPModel, GpParams, SearchStrategy};
use bandsel_core::layers::{conv2d_backward, conv2d_forward, ConvShape};
use bandsel_core::segnet::{soft_iou_loss, UNetConfig, UNetModel, IOU_SMOOTHING};
use bandsel_core::{BandMask, Shape4};
use criterion::{criterion_group, criterion_main, Criterion};

fn conv(c: &mut Criterion) {
    let mut g = c.benchmark_group("conv3x3");
    for (ci, co) in [(8, 8), (16, 16), (32, 32)] {
        let x = random_tensor(Shape4::new(8, 32, 32, ci), 1);
        let k = ConvShape::square(3, ci, co);
        let w = random_vec(k.weight_len(), 2);
        let b = random_vec(co, 3);
        let d = random_tensor(Shape4::new(8, 32, 32, co), 4);
        g.bench_function(format!("forward_{ci}_{co}"), |bch| {
            bch.iter(|| conv2d_forward(black_box(&x), k, &w, &b).unwrap())
        });
        g.bench_function(format!("backward_{ci}_{co}"), |bch| {
            bch.iter(|| conv2d_backward(black_box(&x), k, &w, &d).unwrap())
        });
    }
    g.finish();
}

fn unet(c: &mut Criterion) {
    let mut g = c.benchmark_group("unet_batch8");
    for attention in [false, true] {
        let model = UNetModel::new(UNetConfig::new(8).with_attention(attention)).unwrap();
        let x = random_tensor(Shape4::new(8, 32, 32, 8), 5);
        let t = random_tensor(Shape4::new(8, 32, 32, 1), 6).map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let tag = if attention { "se" } else { "plain" };
        g.bench_function(format!("forward_{tag}"), |b| b.iter(|| model.predict(black_box(&x)).unwrap()));
        g.bench_function(format!("train_step_{tag}"), |b| {
            b.iter(|| {
                let (p, cache) = model.forward(black_box(&x)).unwrap();
                let (_, d) = soft_iou_loss(&p, &t, IOU_SMOOTHING).unwrap();
                model.backward(&cache, &d).unwrap()
            })
        });
    }
    g.finish();
}

fn gp(c: &mut Criterion) {
    let mut g = c.benchmark_group("gp");
    for n in [10, 40] {
        let obs = random_observations(n, 8, 7);
        let excluded: HashSet<BandMask> = obs.iter().map(|o| o.mask.clone()).collect();
        g.bench_function(format!("fit_n{n}"), |b| {
            b.iter(|| GPModel::fit(black_box(&obs), GpParams::default()).unwrap())
        });
        let model = GPModel::fit(&obs, GpParams::default()).unwrap();
        g.bench_function(format!("propose_exhaustive_n{n}"), |b| {
            b.iter(|| propose_next(&model, &excluded, SearchStrategy::Exhaustive, 0).unwrap())
        });
        g.bench_function(format!("propose_hill_climb_n{n}"), |b| {
            b.iter(|| propose_next(&model, &excluded, SearchStrategy::HillClimb, 0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, conv, unet, gp);
criterion_main!(benches);
