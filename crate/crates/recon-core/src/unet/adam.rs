//! Adaptive moment estimation with bias correction.

use super::model::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        Self {
            m: params.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect(),
            v: params.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect(),
            t: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// One bias-corrected update. Aborts on non-finite gradients so a diverged
/// training run fails loudly instead of writing NaN checkpoints.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    state: &mut AdamState,
    hp: &AdamParams,
) -> Result<()> {
    state.t += 1;
    let b1t = 1.0 - hp.beta1.powi(state.t as i32);
    let b2t = 1.0 - hp.beta2.powi(state.t as i32);
    for (i, (p, g)) in params.tensors.iter_mut().zip(&grads.tensors).enumerate() {
        for (j, (pv, &gv)) in p.data.iter_mut().zip(&g.data).enumerate() {
            if !gv.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient in {} at element {} (step {})",
                    p.name, j, state.t
                )));
            }
            let g64 = gv as f64;
            let m = hp.beta1 * state.m[i][j] as f64 + (1.0 - hp.beta1) * g64;
            let v = hp.beta2 * state.v[i][j] as f64 + (1.0 - hp.beta2) * g64 * g64;
            state.m[i][j] = m as f32;
            state.v[i][j] = v as f32;
            let m_hat = m / b1t;
            let v_hat = v / b2t;
            *pv = (*pv as f64 - hp.lr * m_hat / (v_hat.sqrt() + hp.epsilon)) as f32;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unet::model::ParamTensor;

    fn scalar_params(value: f32) -> ParamSet {
        ParamSet {
            tensors: vec![ParamTensor { name: "w".into(), dims: vec![1], data: vec![value] }],
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // with bias correction, |delta| = lr * |g| / (sqrt(g^2) + eps) ~ lr
        for g in [0.5f32, -2.0, 10.0] {
            let mut params = scalar_params(1.0);
            let grads = ParamSet {
                tensors: vec![ParamTensor { name: "w".into(), dims: vec![1], data: vec![g] }],
            };
            let mut state = AdamState::new(&params);
            let hp = AdamParams::default();
            adam_step(&mut params, &grads, &mut state, &hp).unwrap();
            let delta = (params.tensors[0].data[0] - 1.0).abs() as f64;
            assert!((delta - hp.lr).abs() < 1e-6, "g={} delta={}", g, delta);
            assert_eq!(
                params.tensors[0].data[0] < 1.0,
                g > 0.0,
                "step must oppose the gradient"
            );
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut params = scalar_params(0.7);
        let grads = scalar_params(0.0);
        let mut state = AdamState::new(&params);
        // seed the moments with one nonzero step first
        let g1 = ParamSet {
            tensors: vec![ParamTensor { name: "w".into(), dims: vec![1], data: vec![1.0] }],
        };
        adam_step(&mut params, &g1, &mut state, &AdamParams::default()).unwrap();
        let after_first = params.tensors[0].data[0];
        let m_before = state.m[0][0];
        adam_step(&mut params, &grads, &mut state, &AdamParams::default()).unwrap();
        // moments decay toward zero; the parameter still drifts slightly
        // because m is nonzero, so check the moment decay itself
        assert!(state.m[0][0].abs() < m_before.abs());
        assert!(params.tensors[0].data[0].is_finite());
        assert!((params.tensors[0].data[0] - after_first).abs() <= AdamParams::default().lr as f32 + 1e-7);
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut params = scalar_params(0.3);
            let mut state = AdamState::new(&params);
            let mut trajectory = Vec::new();
            for step in 0..20 {
                let g = ((step as f32) * 0.7).sin();
                let grads = ParamSet {
                    tensors: vec![ParamTensor { name: "w".into(), dims: vec![1], data: vec![g] }],
                };
                adam_step(&mut params, &grads, &mut state, &AdamParams::default()).unwrap();
                trajectory.push(params.tensors[0].data[0].to_bits());
            }
            trajectory
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut params = scalar_params(0.0);
        let grads = scalar_params(f32::NAN);
        let mut state = AdamState::new(&params);
        match adam_step(&mut params, &grads, &mut state, &AdamParams::default()) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("non-finite")),
            other => panic!("expected numerical error, got {:?}", other.is_ok()),
        }
    }
}
