//! Residual U-Net assembly: configuration, parameter initialization, and the
//! forward/backward execution engine.
//!
//! The network is compiled to a flat op list (`UNetPlan`) from the config and
//! input shape; execution walks the ops with a skip stack, recording a tape
//! of per-op caches for reverse mode. The residual head computes
//! `ReLU(input + residual)`, so a zero-initialized final layer makes the
//! whole network the identity on non-negative inputs.

use serde::{Deserialize, Serialize};

use super::layers::{
    concat_channels, conv3d_backward, conv3d_forward, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, split_channels, upconv_backward, upconv_forward, ConvKernel,
};
use super::tensor4::Tensor4;
use crate::rng::{stream, Seed};
use crate::tensor::Cine;
use crate::{Error, Result};


use rand_distr::{Distribution, Uniform};

/// Architecture descriptor. `temporal_kernel` = 3 is the spatio-temporal
/// network; 1 gives the per-frame (2D) ablation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UNetConfig {
    /// Number of resolution scales (>= 2).
    pub levels: usize,
    /// Channels at the top scale; doubled per level.
    pub base_channels: usize,
    pub convs_per_level: usize,
    /// Temporal kernel extent, 1 or 3 (spatial is always 3x3).
    pub temporal_kernel: usize,
    /// Pool the time axis (only where divisible by 2).
    pub temporal_pool: bool,
}

impl Default for UNetConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            base_channels: 32,
            convs_per_level: 2,
            temporal_kernel: 3,
            temporal_pool: true,
        }
    }
}

impl UNetConfig {
    /// Desk-scale preset small enough to train on a CPU in minutes.
    pub fn desk() -> Self {
        Self { levels: 2, base_channels: 16, ..Self::default() }
    }

    /// Per-frame ablation: 3x3 kernels applied to each frame independently.
    pub fn two_d(mut self) -> Self {
        self.temporal_kernel = 1;
        self.temporal_pool = false;
        self
    }

    pub fn validate(&self, input: (usize, usize, usize)) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::Config("unet needs at least 2 levels".into()));
        }
        if self.base_channels == 0 || self.convs_per_level == 0 {
            return Err(Error::Config("channels and convs_per_level must be >= 1".into()));
        }
        if self.temporal_kernel != 1 && self.temporal_kernel != 3 {
            return Err(Error::Config("temporal_kernel must be 1 or 3".into()));
        }
        let (t, h, w) = input;
        let div = 1usize << (self.levels - 1);
        if h % div != 0 || w % div != 0 || h == 0 || w == 0 || t == 0 {
            return Err(Error::Config(format!(
                "input {}x{}x{} not divisible by 2^{} spatial poolings",
                t,
                h,
                w,
                self.levels - 1
            )));
        }
        Ok(())
    }
}

/// Shape record of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

/// All network parameters as a flat, named list (manifest order is the
/// checkpoint order).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub tensors: Vec<ParamTensor>,
}

impl ParamSet {
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .map(|t| ParamTensor {
                    name: t.name.clone(),
                    dims: t.dims.clone(),
                    data: vec![0.0; t.data.len()],
                })
                .collect(),
        }
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Accumulate `other` into self element-wise.
    pub fn add_assign(&mut self, other: &ParamSet) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f32) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v *= s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// One step of the compiled network.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOp {
    Conv { weight: usize, bias: usize, c_in: usize, c_out: usize, relu: bool },
    Pool { window: (usize, usize, usize) },
    UpConv { weight: usize, bias: usize, c_in: usize, c_out: usize, window: (usize, usize, usize) },
    PushSkip,
    ConcatSkip,
}

/// Compiled network for one input shape.
#[derive(Debug, Clone)]
pub struct UNetPlan {
    pub config: UNetConfig,
    pub input_shape: (usize, usize, usize),
    pub ops: Vec<PlanOp>,
    pub param_specs: Vec<TensorSpec>,
}

/// Build the op list and parameter manifest for `config` on inputs of shape
/// (t, h, w).
pub fn build_plan(config: &UNetConfig, input_shape: (usize, usize, usize)) -> Result<UNetPlan> {
    config.validate(input_shape)?;
    let kt = config.temporal_kernel;
    let mut ops = Vec::new();
    let mut specs: Vec<TensorSpec> = Vec::new();
    let mut push_conv = |specs: &mut Vec<TensorSpec>,
                         ops: &mut Vec<PlanOp>,
                         name: String,
                         c_in: usize,
                         c_out: usize,
                         relu: bool| {
        let weight = specs.len();
        specs.push(TensorSpec { name: format!("{name}.w"), dims: vec![c_out, c_in, kt, 3, 3] });
        let bias = specs.len();
        specs.push(TensorSpec { name: format!("{name}.b"), dims: vec![c_out] });
        ops.push(PlanOp::Conv { weight, bias, c_in, c_out, relu });
    };

    let channels: Vec<usize> =
        (0..config.levels).map(|l| config.base_channels << l).collect();
    let mut cur_t = input_shape.0;
    let mut windows = Vec::new();
    let mut c_in = 1usize;
    for lvl in 0..config.levels - 1 {
        for k in 0..config.convs_per_level {
            push_conv(&mut specs, &mut ops, format!("enc{lvl}.conv{k}"), c_in, channels[lvl], true);
            c_in = channels[lvl];
        }
        ops.push(PlanOp::PushSkip);
        let wt = if config.temporal_pool && cur_t % 2 == 0 { 2 } else { 1 };
        windows.push((wt, 2, 2));
        ops.push(PlanOp::Pool { window: (wt, 2, 2) });
        cur_t /= wt;
    }
    for k in 0..config.convs_per_level {
        let c_out = channels[config.levels - 1];
        push_conv(&mut specs, &mut ops, format!("bottom.conv{k}"), c_in, c_out, true);
        c_in = c_out;
    }
    for lvl in (0..config.levels - 1).rev() {
        let window = windows[lvl];
        let weight = specs.len();
        specs.push(TensorSpec {
            name: format!("dec{lvl}.up.w"),
            dims: vec![c_in, channels[lvl], window.0, window.1, window.2],
        });
        let bias = specs.len();
        specs.push(TensorSpec { name: format!("dec{lvl}.up.b"), dims: vec![channels[lvl]] });
        ops.push(PlanOp::UpConv { weight, bias, c_in, c_out: channels[lvl], window });
        ops.push(PlanOp::ConcatSkip);
        c_in = channels[lvl] * 2;
        for k in 0..config.convs_per_level {
            push_conv(&mut specs, &mut ops, format!("dec{lvl}.conv{k}"), c_in, channels[lvl], true);
            c_in = channels[lvl];
        }
    }
    // final residual layer: no nonlinearity, zero-initialized
    push_conv(&mut specs, &mut ops, "final".into(), c_in, 1, false);
    Ok(UNetPlan { config: *config, input_shape, ops, param_specs: specs })
}

/// Total trainable parameter count of a plan.
pub fn parameter_count(plan: &UNetPlan) -> usize {
    plan.param_specs.iter().map(|s| s.dims.iter().product::<usize>()).sum()
}

/// He-uniform initialization scaled by fan-in; the final residual layer is
/// zero-initialized so training starts from the identity mapping.
pub fn init_params(plan: &UNetPlan, seed: Seed) -> ParamSet {
    let mut rng = stream(seed, "unet/init");
    let tensors = plan
        .param_specs
        .iter()
        .map(|spec| {
            let n: usize = spec.dims.iter().product();
            let data = if spec.name.starts_with("final.") || spec.name.ends_with(".b") {
                vec![0.0; n]
            } else {
                // dims = (c_out, c_in, kt, ky, kx) or transposed layout;
                // fan-in = product of all dims except the first
                let fan_in: usize = spec.dims[1..].iter().product();
                let limit = (6.0 / fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).unwrap();
                (0..n).map(|_| dist.sample(&mut rng) as f32).collect()
            };
            ParamTensor { name: spec.name.clone(), dims: spec.dims.clone(), data }
        })
        .collect();
    ParamSet { tensors }
}

fn conv_kernel(params: &ParamSet, weight: usize, bias: usize, transposed: bool) -> ConvKernel {
    let w = &params.tensors[weight];
    let b = &params.tensors[bias];
    let d = &w.dims;
    // transposed kernels store (c_in, c_out, ...) but ConvKernel's fields are
    // reused as (first dim, second dim, ...)
    let _ = transposed;
    ConvKernel {
        c_out: d[0],
        c_in: d[1],
        kt: d[2],
        ky: d[3],
        kx: d[4],
        weights: w.data.clone(),
        bias: b.data.clone(),
    }
}

/// Per-op cache recorded during the forward pass.
pub enum TapeEntry {
    Conv { input: Tensor4, relu_out: Option<Tensor4> },
    Pool { argmax: Vec<u32>, in_shape: (usize, usize, usize, usize) },
    UpConv { input: Tensor4 },
    PushSkip,
    ConcatSkip { c_first: usize },
}

/// Recorded forward intermediates sufficient for one reverse sweep.
pub struct Tape {
    pub entries: Vec<TapeEntry>,
    /// Network input (1 x T x H x W).
    pub input: Tensor4,
    /// Final output after the residual ReLU.
    pub output: Tensor4,
}

/// Run the residual U-Net: `ReLU(input + residual_branch(input))`.
/// Returns the output and the tape for reverse mode.
pub fn forward_with_tape(plan: &UNetPlan, params: &ParamSet, input: &Tensor4) -> (Tensor4, Tape) {
    assert_eq!(input.c, 1, "network input is single-channel");
    assert_eq!((input.t, input.h, input.w), plan.input_shape, "plan/input shape mismatch");
    let mut entries = Vec::with_capacity(plan.ops.len());
    let mut skip_stack: Vec<Tensor4> = Vec::new();
    let mut cur = input.clone();
    for op in &plan.ops {
        match op {
            PlanOp::Conv { weight, bias, relu, .. } => {
                let kernel = conv_kernel(params, *weight, *bias, false);
                let mut out = conv3d_forward(&cur, &kernel);
                let relu_out = if *relu {
                    relu_forward(&mut out);
                    Some(out.clone())
                } else {
                    None
                };
                entries.push(TapeEntry::Conv { input: cur, relu_out });
                cur = out;
            }
            PlanOp::Pool { window } => {
                let (out, argmax) = maxpool_forward(&cur, *window);
                entries.push(TapeEntry::Pool { argmax, in_shape: (cur.c, cur.t, cur.h, cur.w) });
                cur = out;
            }
            PlanOp::UpConv { weight, bias, window, .. } => {
                let kernel = conv_kernel(params, *weight, *bias, true);
                let out = upconv_forward(&cur, &kernel, *window);
                entries.push(TapeEntry::UpConv { input: cur });
                cur = out;
            }
            PlanOp::PushSkip => {
                skip_stack.push(cur.clone());
                entries.push(TapeEntry::PushSkip);
            }
            PlanOp::ConcatSkip => {
                let skip = skip_stack.pop().expect("skip stack underflow");
                let out = concat_channels(&cur, &skip);
                entries.push(TapeEntry::ConcatSkip { c_first: cur.c });
                cur = out;
            }
        }
    }
    debug_assert!(skip_stack.is_empty());
    // residual head
    let mut output = cur;
    for (o, &i) in output.data.iter_mut().zip(&input.data) {
        *o += i;
        if *o < 0.0 {
            *o = 0.0;
        }
    }
    let tape = Tape { entries, input: input.clone(), output: output.clone() };
    (output, tape)
}

/// Reverse sweep: gradient of a scalar loss w.r.t. every parameter, given
/// d(loss)/d(output).
pub fn backward(
    plan: &UNetPlan,
    params: &ParamSet,
    tape: &Tape,
    grad_output: &Tensor4,
) -> ParamSet {
    let mut grads = params.zeros_like();
    // through the residual head: gradient passes where output > 0
    let mut g = grad_output.clone();
    for (gv, &o) in g.data.iter_mut().zip(&tape.output.data) {
        if o <= 0.0 {
            *gv = 0.0;
        }
    }
    // the same gradient reaches the residual branch; the direct input path
    // receives it too but input gradients are not needed for training
    let mut skip_grads: Vec<Tensor4> = Vec::new();
    for (i, op) in plan.ops.iter().enumerate().rev() {
        let entry = &tape.entries[i];
        match (op, entry) {
            (
                PlanOp::Conv { weight, bias, .. },
                TapeEntry::Conv { input, relu_out },
            ) => {
                if let Some(y) = relu_out {
                    relu_backward(y, &mut g);
                }
                let kernel = conv_kernel(params, *weight, *bias, false);
                let first_layer = i == 0;
                let (gx, gw, gb) = conv3d_backward(input, &kernel, &g, !first_layer);
                grads.tensors[*weight].data.copy_from_slice(&gw);
                grads.tensors[*bias].data.copy_from_slice(&gb);
                if let Some(gx) = gx {
                    g = gx;
                } else {
                    break;
                }
            }
            (PlanOp::Pool { .. }, TapeEntry::Pool { argmax, in_shape }) => {
                g = maxpool_backward(&g, argmax, *in_shape);
            }
            (
                PlanOp::UpConv { weight, bias, window, .. },
                TapeEntry::UpConv { input },
            ) => {
                let kernel = conv_kernel(params, *weight, *bias, true);
                let (gx, gw, gb) = upconv_backward(input, &kernel, *window, &g);
                grads.tensors[*weight].data.copy_from_slice(&gw);
                grads.tensors[*bias].data.copy_from_slice(&gb);
                g = gx;
            }
            (PlanOp::PushSkip, TapeEntry::PushSkip) => {
                let skip_g = skip_grads.pop().expect("skip gradient underflow");
                for (a, b) in g.data.iter_mut().zip(&skip_g.data) {
                    *a += b;
                }
            }
            (PlanOp::ConcatSkip, TapeEntry::ConcatSkip { c_first }) => {
                let (g_cur, g_skip) = split_channels(&g, *c_first);
                skip_grads.push(g_skip);
                g = g_cur;
            }
            _ => unreachable!("op/tape mismatch"),
        }
    }
    grads
}

/// Convenience wrappers between [`Cine`] and the 1-channel tensor layout.
pub fn cine_to_tensor(cine: &Cine) -> Tensor4 {
    let (t, h, w) = cine.shape();
    Tensor4 { c: 1, t, h, w, data: cine.data().to_vec() }
}

pub fn tensor_to_cine(t: &Tensor4, frame_dt_ms: f64) -> Cine {
    assert_eq!(t.c, 1);
    Cine::from_vec(t.t, t.h, t.w, frame_dt_ms, t.data.clone()).unwrap()
}

/// Inference: run the network on a cine.
pub fn unet_forward(plan: &UNetPlan, params: &ParamSet, aliased: &Cine) -> Cine {
    let input = cine_to_tensor(aliased);
    let (out, _) = forward_with_tape(plan, params, &input);
    tensor_to_cine(&out, aliased.frame_dt_ms)
}

/// Per-frame 2D inference: apply a temporal-kernel-1 network to one frame.
pub fn unet_forward_frame_2d(
    config: &UNetConfig,
    params: &ParamSet,
    frame: &[f32],
    h: usize,
    w: usize,
) -> Result<Vec<f32>> {
    if config.temporal_kernel != 1 || config.temporal_pool {
        return Err(Error::Config("2D inference needs a temporal_kernel=1, no-temporal-pool net".into()));
    }
    let plan = build_plan(config, (1, h, w))?;
    let input = Tensor4 { c: 1, t: 1, h, w, data: frame.to_vec() };
    let (out, _) = forward_with_tape(&plan, params, &input);
    Ok(out.data)
}
