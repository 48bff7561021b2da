//! Training losses with exact gradients.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    L2,
    L1,
}

/// Loss value plus d(loss)/d(pred). L2 is mean squared error, L1 mean
/// absolute error (subgradient 0 at exact ties).
pub fn loss_and_grad(kind: LossKind, pred: &[f32], truth: &[f32]) -> Result<(f64, Vec<f32>)> {
    if pred.len() != truth.len() {
        return Err(Error::Shape("loss inputs differ in length".into()));
    }
    let n = pred.len() as f64;
    let mut grad = vec![0.0f32; pred.len()];
    let mut total = 0.0f64;
    match kind {
        LossKind::L2 => {
            for (g, (&p, &t)) in grad.iter_mut().zip(pred.iter().zip(truth)) {
                let d = (p - t) as f64;
                total += d * d;
                *g = (2.0 * d / n) as f32;
            }
        }
        LossKind::L1 => {
            for (g, (&p, &t)) in grad.iter_mut().zip(pred.iter().zip(truth)) {
                let d = (p - t) as f64;
                total += d.abs();
                *g = (d.signum() / n) as f32;
                if d == 0.0 {
                    *g = 0.0;
                }
            }
        }
    }
    Ok((total / n, grad))
}
