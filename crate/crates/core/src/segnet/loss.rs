//! Soft-IoU training loss and the binary Dice evaluation metric.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4};

pub const IOU_SMOOTHING: f64 = 1.0;
pub const DICE_THRESHOLD: f64 = 0.5;

/// `1 − (I + s) / (U + s)` with `I = Σ p·t`, `U = Σ p + Σ t − I`, summed over
/// the whole batch. Returns the loss and ∂loss/∂prediction.
///
/// With `s = 0` and an empty union the ratio is taken as 1 (loss 0).
pub fn soft_iou_loss<T: Scalar>(
    prediction: &Tensor4<T>,
    target: &Tensor4<T>,
    smoothing: f64,
) -> Result<(f64, Tensor4<T>)> {
    if prediction.shape() != target.shape() {
        return Err(Error::shape("soft_iou_loss", prediction.shape(), target.shape()));
    }
    let (mut inter, mut sum_p, mut sum_t) = (0.0f64, 0.0f64, 0.0f64);
    for (&p, &t) in prediction.data().iter().zip(target.data()) {
        let (p, t) = (p.as_f64(), t.as_f64());
        inter += p * t;
        sum_p += p;
        sum_t += t;
    }
    let num = inter + smoothing;
    let den = sum_p + sum_t - inter + smoothing;
    if den == 0.0 {
        return Ok((0.0, Tensor4::zeros(prediction.shape())?));
    }
    let loss = 1.0 - num / den;
    // ∂/∂p_i of −num/den, using ∂num/∂p_i = t_i and ∂den/∂p_i = 1 − t_i.
    let den2 = den * den;
    let grad: Vec<T> = target
        .data()
        .iter()
        .map(|&t| {
            let t = t.as_f64();
            T::of_f64(-(t * den - num * (1.0 - t)) / den2)
        })
        .collect();
    Ok((loss, Tensor4::from_vec(prediction.shape(), grad)?))
}

/// `2|P∩T| / (|P| + |T|)`, 1.0 when both are empty.
pub fn binary_dice(pred: impl IntoIterator<Item = bool>, target: impl IntoIterator<Item = bool>) -> f64 {
    let (mut inter, mut np, mut nt) = (0u64, 0u64, 0u64);
    for (p, t) in pred.into_iter().zip(target) {
        inter += (p && t) as u64;
        np += p as u64;
        nt += t as u64;
    }
    if np + nt == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (np + nt) as f64
    }
}

/// `|P∩T| / |P∪T|`, 1.0 when both are empty.
pub fn binary_iou(pred: impl IntoIterator<Item = bool>, target: impl IntoIterator<Item = bool>) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    for (p, t) in pred.into_iter().zip(target) {
        inter += (p && t) as u64;
        union += (p || t) as u64;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Dice of the thresholded prediction (`p >= 0.5`) against a 0/1 target.
pub fn dice_coefficient<T: Scalar>(prediction: &Tensor4<T>, target: &Tensor4<T>) -> Result<f64> {
    if prediction.shape() != target.shape() {
        return Err(Error::shape("dice_coefficient", prediction.shape(), target.shape()));
    }
    Ok(binary_dice(
        prediction.data().iter().map(|p| p.as_f64() >= DICE_THRESHOLD),
        target.data().iter().map(|t| t.as_f64() >= DICE_THRESHOLD),
    ))
}
