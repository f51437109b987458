use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::loss::{soft_iou_loss, IOU_SMOOTHING};
use super::predict::evaluate;
use super::unet::UNetModel;
use crate::error::{Error, Result};
use crate::mask::BandMask;
use crate::synthdata::RasterDataset;
use crate::tensor::{Shape4, Tensor4};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainOptions {
    /// Desk scale: 25 epochs of batch 32.
    fn default() -> Self {
        Self { epochs: 25, batch_size: 32, lr: 0.01, seed: 0 }
    }
}

impl TrainOptions {
    /// Settings for the planted benchmark at 32×32 tiles: 10 epochs of
    /// batch 2 at lr 5e-4. Larger steps or fewer of them often lock the
    /// untrained network into predicting every pixel positive.
    pub fn desk() -> Self {
        Self { epochs: 10, batch_size: 2, lr: 5e-4, seed: 0 }
    }

    /// Batch 128, as used with 96×96 tiles.
    pub fn full_scale() -> Self {
        Self { batch_size: 128, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub test_dice: f64,
    pub seconds: f64,
    pub seed: u64,
}

fn gather(src: &Tensor4, idx: &[usize]) -> Result<Tensor4> {
    let s = src.shape();
    let per = s.h * s.w * s.c;
    let mut data = Vec::with_capacity(per * idx.len());
    for &i in idx {
        data.extend_from_slice(&src.data()[i * per..(i + 1) * per]);
    }
    Tensor4::from_vec(Shape4 { n: idx.len(), ..s }, data)
}

/// Runs the Adam training loop in place and returns the per-epoch mean loss.
pub fn fit(model: &mut UNetModel, inputs: &Tensor4, targets: &Tensor4, opts: &TrainOptions) -> Result<Vec<f64>> {
    if opts.epochs == 0 || opts.batch_size == 0 {
        return Err(Error::InvalidArgument("epochs and batch_size must be >= 1".into()));
    }
    let (si, st) = (inputs.shape(), targets.shape());
    if (si.n, si.h, si.w) != (st.n, st.h, st.w) || st.c != 1 {
        return Err(Error::shape("train", si.with_c(1), st));
    }
    if si.c != model.config().in_channels {
        return Err(Error::shape("train", format!("{} input channels", model.config().in_channels), si));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut adam = AdamState::new(model.params(), opts.lr);
    let mut order: Vec<usize> = (0..si.n).collect();
    let mut losses = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (b, idx) in order.chunks(opts.batch_size).enumerate() {
            let x = gather(inputs, idx)?;
            let t = gather(targets, idx)?;
            let (pred, cache) = model.forward(&x)?;
            let (loss, d_pred) = soft_iou_loss(&pred, &t, IOU_SMOOTHING)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {epoch}, batch {b}")));
            }
            let grads = model.backward(&cache, &d_pred)?;
            adam.step(model.params_mut(), &grads.params).map_err(|e| match e {
                Error::NonFinite(what) => Error::NonFinite(format!("{what} (epoch {epoch}, batch {b})")),
                other => other,
            })?;
            total += loss;
            batches += 1;
        }
        let mean = total / batches as f64;
        log::debug!("epoch {epoch}: loss {mean:.5}");
        losses.push(mean);
    }
    Ok(losses)
}

/// Trains on the dataset's tiles restricted to `mask`, then scores the test rasters.
pub fn train(
    mut model: UNetModel,
    dataset: &RasterDataset,
    mask: &BandMask,
    opts: &TrainOptions,
) -> Result<(UNetModel, TrainReport)> {
    let want = if model.config().use_input_attention { dataset.bands() } else { mask.popcount() };
    if model.config().in_channels != want || mask.len() != dataset.bands() {
        return Err(Error::InvalidArgument(format!(
            "model expects {} channels but mask {mask} selects {} of {} bands",
            model.config().in_channels,
            mask.popcount(),
            dataset.bands()
        )));
    }
    let mask = if model.config().use_input_attention { BandMask::all(dataset.bands()) } else { mask.clone() };
    let start = Instant::now();
    let inputs = dataset.train_inputs(&mask)?;
    let epoch_losses = fit(&mut model, &inputs, dataset.train_masks(), opts)?;
    model.input_stats = Some(dataset.stats().clone());
    model.band_mask = Some(mask);
    let test_dice = evaluate(&model, dataset)?;
    Ok((model, TrainReport { epoch_losses, test_dice, seconds: start.elapsed().as_secs_f64(), seed: opts.seed }))
}
