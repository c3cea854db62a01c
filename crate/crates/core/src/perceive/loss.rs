//! Center-point losses: the modified focal loss and the offset regression
//! loss. Pure functions; nothing in this crate trains a network, but the
//! label/loss math is exercised by the detection pipeline tests.

use thiserror::Error;

use super::labels::LabelMap;

/// Focusing exponent on the prediction error.
pub const FOCAL_ALPHA: i32 = 2;
/// Down-weighting exponent on near-center background pixels.
pub const FOCAL_BETA: i32 = 4;
/// Predictions are clamped to [FLOOR, 1 - FLOOR] to keep the logs finite.
pub const PROB_FLOOR: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: prediction {pred_h}x{pred_w}, target {tgt_h}x{tgt_w}")]
    ShapeMismatch { pred_h: usize, pred_w: usize, tgt_h: usize, tgt_w: usize },
}

fn check_shapes(pred: &LabelMap, target: &LabelMap) -> Result<(), LossError> {
    if pred.h != target.h || pred.w != target.w {
        return Err(LossError::ShapeMismatch {
            pred_h: pred.h,
            pred_w: pred.w,
            tgt_h: target.h,
            tgt_w: target.w,
        });
    }
    Ok(())
}

/// Modified focal loss over one class map.
///
/// Per pixel: `(1-p)^2 * -ln p` where the target is exactly 1, and
/// `(1-y)^4 * p^2 * -ln(1-p)` elsewhere. The sum is divided by `n_objects`
/// unless it is zero, in which case the division is dropped.
pub fn focal_loss(pred: &LabelMap, target: &LabelMap, n_objects: usize) -> Result<f64, LossError> {
    check_shapes(pred, target)?;
    let mut sum = 0.0;
    for (p, y) in pred.values.iter().zip(&target.values) {
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        if *y == 1.0 {
            sum += (1.0 - p).powi(FOCAL_ALPHA) * -(p.ln());
        } else {
            sum += (1.0 - y).powi(FOCAL_BETA) * p.powi(FOCAL_ALPHA) * -((1.0 - p).ln());
        }
    }
    Ok(if n_objects == 0 { sum } else { sum / n_objects as f64 })
}

/// Analytic gradient of [`focal_loss`] with respect to each prediction.
/// Valid where the clamp is inactive.
pub fn focal_loss_grad(
    pred: &LabelMap,
    target: &LabelMap,
    n_objects: usize,
) -> Result<LabelMap, LossError> {
    check_shapes(pred, target)?;
    let scale = if n_objects == 0 { 1.0 } else { 1.0 / n_objects as f64 };
    let mut grad = LabelMap::zeros(pred.h, pred.w);
    for i in 0..pred.values.len() {
        let p = pred.values[i].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        let y = target.values[i];
        let g = if y == 1.0 {
            // d/dp [(1-p)^2 * -ln p] = 2(1-p) ln p - (1-p)^2 / p
            2.0 * (1.0 - p) * p.ln() - (1.0 - p).powi(2) / p
        } else {
            // d/dp [(1-y)^4 p^2 * -ln(1-p)]
            (1.0 - y).powi(FOCAL_BETA) * (-2.0 * p * (1.0 - p).ln() + p * p / (1.0 - p))
        };
        grad.values[i] = g * scale;
    }
    Ok(grad)
}

/// Mean-squared error between predicted and target offsets.
pub fn offset_mse(pred: &[f64], target: &[f64]) -> Result<f64, LossError> {
    if pred.len() != target.len() {
        return Err(LossError::ShapeMismatch {
            pred_h: 1,
            pred_w: pred.len(),
            tgt_h: 1,
            tgt_w: target.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / pred.len() as f64)
}
