//! Layer primitives with hand-written reverse-mode gradients: 3D convolution
//! ("same" zero padding), ReLU, max pooling with argmax routing, and the
//! stride-matched transposed convolution used for upsampling.

use super::tensor4::{accumulate_shifted, dot_shifted, Tensor4};
use crate::parallel;

/// Kernel tensor (c_out, c_in, kt, ky, kx) plus per-output-channel bias.
#[derive(Debug, Clone)]
pub struct ConvKernel {
    pub c_out: usize,
    pub c_in: usize,
    pub kt: usize,
    pub ky: usize,
    pub kx: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvKernel {
    pub fn taps(&self) -> usize {
        self.kt * self.ky * self.kx
    }

    #[inline]
    pub fn weight(&self, co: usize, ci: usize, tap: usize) -> f32 {
        self.weights[(co * self.c_in + ci) * self.taps() + tap]
    }
}

fn tap_shift(kernel: &ConvKernel, tap: usize) -> (isize, isize, isize) {
    let kyx = kernel.ky * kernel.kx;
    let dt = (tap / kyx) as isize - (kernel.kt / 2) as isize;
    let dy = ((tap % kyx) / kernel.kx) as isize - (kernel.ky / 2) as isize;
    let dx = (tap % kernel.kx) as isize - (kernel.kx / 2) as isize;
    (dt, dy, dx)
}

/// Cross-correlation with zero padding ("same" output size).
pub fn conv3d_forward(x: &Tensor4, kernel: &ConvKernel) -> Tensor4 {
    assert_eq!(x.c, kernel.c_in, "input channels");
    let mut out = Tensor4::zeros(kernel.c_out, x.t, x.h, x.w);
    let dims = (x.t, x.h, x.w);
    let vol = x.volume();
    parallel::for_each_chunk_mut(&mut out.data, vol, |co, out_ch| {
        out_ch.fill(kernel.bias[co]);
        for ci in 0..kernel.c_in {
            let src = x.channel(ci);
            for tap in 0..kernel.taps() {
                let w = kernel.weight(co, ci, tap);
                if w != 0.0 {
                    accumulate_shifted(out_ch, src, dims, tap_shift(kernel, tap), w);
                }
            }
        }
    });
    out
}

/// Gradients of [`conv3d_forward`]: (grad_x, grad_weights, grad_bias).
/// `need_grad_x` skips the input gradient for the first layer.
pub fn conv3d_backward(
    x: &Tensor4,
    kernel: &ConvKernel,
    grad_out: &Tensor4,
    need_grad_x: bool,
) -> (Option<Tensor4>, Vec<f32>, Vec<f32>) {
    let dims = (x.t, x.h, x.w);
    let taps = kernel.taps();
    let grad_bias: Vec<f32> = (0..kernel.c_out)
        .map(|co| grad_out.channel(co).iter().map(|&v| v as f64).sum::<f64>() as f32)
        .collect();
    // grad_w[co, ci, tap] = <grad_out[co], x[ci] shifted by tap>
    let grad_w_rows: Vec<Vec<f32>> = parallel::map_indexed(kernel.c_out, |co| {
        let g = grad_out.channel(co);
        let mut row = vec![0.0f32; kernel.c_in * taps];
        for ci in 0..kernel.c_in {
            let src = x.channel(ci);
            for tap in 0..taps {
                row[ci * taps + tap] = dot_shifted(g, src, dims, tap_shift(kernel, tap)) as f32;
            }
        }
        row
    });
    let grad_weights: Vec<f32> = grad_w_rows.into_iter().flatten().collect();
    let grad_x = need_grad_x.then(|| {
        let mut gx = Tensor4::zeros(kernel.c_in, x.t, x.h, x.w);
        parallel::for_each_chunk_mut(&mut gx.data, x.volume(), |ci, gx_ch| {
            for co in 0..kernel.c_out {
                let g = grad_out.channel(co);
                for tap in 0..taps {
                    let w = kernel.weight(co, ci, tap);
                    if w != 0.0 {
                        let (dt, dy, dx) = tap_shift(kernel, tap);
                        accumulate_shifted(gx_ch, g, dims, (-dt, -dy, -dx), w);
                    }
                }
            }
        });
        gx
    });
    (grad_x, grad_weights, grad_bias)
}

pub fn relu_forward(x: &mut Tensor4) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Gradient through ReLU given the *output* values (y > 0 iff x > 0; the
/// subgradient at 0 is taken as 0).
pub fn relu_backward(y: &Tensor4, grad_out: &mut Tensor4) {
    for (g, &v) in grad_out.data.iter_mut().zip(&y.data) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Max pooling over non-overlapping (wt, 2, 2) windows; records the argmax
/// input index per output element for the backward pass.
pub fn maxpool_forward(x: &Tensor4, window: (usize, usize, usize)) -> (Tensor4, Vec<u32>) {
    let (wt, wy, wx) = window;
    assert!(x.t % wt == 0 && x.h % wy == 0 && x.w % wx == 0, "pool window must divide dims");
    let (ot, oh, ow) = (x.t / wt, x.h / wy, x.w / wx);
    let mut out = Tensor4::zeros(x.c, ot, oh, ow);
    let mut argmax = vec![0u32; x.c * ot * oh * ow];
    for c in 0..x.c {
        let src = x.channel(c);
        let dst = out.channel_mut(c);
        let amax = &mut argmax[c * ot * oh * ow..(c + 1) * ot * oh * ow];
        for t in 0..ot {
            for y in 0..oh {
                for xo in 0..ow {
                    let mut best = f32::NEG_INFINITY;
                    let mut best_idx = 0u32;
                    for dt in 0..wt {
                        for dy in 0..wy {
                            for dx in 0..wx {
                                let idx = ((t * wt + dt) * x.h + y * wy + dy) * x.w + xo * wx + dx;
                                if src[idx] > best {
                                    best = src[idx];
                                    best_idx = idx as u32;
                                }
                            }
                        }
                    }
                    dst[(t * oh + y) * ow + xo] = best;
                    amax[(t * oh + y) * ow + xo] = best_idx;
                }
            }
        }
    }
    (out, argmax)
}

/// Route the gradient back to the argmax positions only.
pub fn maxpool_backward(
    grad_out: &Tensor4,
    argmax: &[u32],
    input_shape: (usize, usize, usize, usize),
) -> Tensor4 {
    let (c, t, h, w) = input_shape;
    let mut gx = Tensor4::zeros(c, t, h, w);
    let out_vol = grad_out.volume();
    for ch in 0..c {
        let g = grad_out.channel(ch);
        let amax = &argmax[ch * out_vol..(ch + 1) * out_vol];
        let dst = gx.channel_mut(ch);
        for (i, &v) in g.iter().enumerate() {
            dst[amax[i] as usize] += v;
        }
    }
    gx
}

/// Transposed convolution with kernel = stride = `window`: each input voxel
/// paints one non-overlapping window of the output. Restores the shape a
/// matching pool step removed. Kernel layout (c_in, c_out, wt, wy, wx).
pub fn upconv_forward(x: &Tensor4, kernel: &ConvKernel, window: (usize, usize, usize)) -> Tensor4 {
    let (wt, wy, wx) = window;
    assert_eq!(kernel.kt, wt);
    assert_eq!(kernel.ky, wy);
    assert_eq!(kernel.kx, wx);
    // kernel.c_out/c_in fields hold (c_in, c_out) for the transposed op
    let (ci_n, co_n) = (kernel.c_out, kernel.c_in);
    assert_eq!(x.c, ci_n, "input channels");
    let (ot, oh, ow) = (x.t * wt, x.h * wy, x.w * wx);
    let mut out = Tensor4::zeros(co_n, ot, oh, ow);
    let taps = kernel.taps();
    parallel::for_each_chunk_mut(&mut out.data, ot * oh * ow, |co, out_ch| {
        out_ch.fill(kernel.bias[co]);
        for ci in 0..ci_n {
            let src = x.channel(ci);
            for tap in 0..taps {
                let w = kernel.weights[(ci * co_n + co) * taps + tap];
                if w == 0.0 {
                    continue;
                }
                let dt = tap / (wy * wx);
                let dy = (tap % (wy * wx)) / wx;
                let dx = tap % wx;
                for t in 0..x.t {
                    for y in 0..x.h {
                        let src_row = (t * x.h + y) * x.w;
                        let dst_row = ((t * wt + dt) * oh + y * wy + dy) * ow + dx;
                        for xo in 0..x.w {
                            out_ch[dst_row + xo * wx] += w * src[src_row + xo];
                        }
                    }
                }
            }
        }
    });
    out
}

/// Gradients of [`upconv_forward`].
pub fn upconv_backward(
    x: &Tensor4,
    kernel: &ConvKernel,
    window: (usize, usize, usize),
    grad_out: &Tensor4,
) -> (Tensor4, Vec<f32>, Vec<f32>) {
    let (wt, wy, wx) = window;
    let (ci_n, co_n) = (kernel.c_out, kernel.c_in);
    let taps = kernel.taps();
    let (oh, ow) = (grad_out.h, grad_out.w);
    let grad_bias: Vec<f32> = (0..co_n)
        .map(|co| grad_out.channel(co).iter().map(|&v| v as f64).sum::<f64>() as f32)
        .collect();
    let mut grad_weights = vec![0.0f32; kernel.weights.len()];
    let rows: Vec<Vec<f32>> = parallel::map_indexed(ci_n, |ci| {
        let src = x.channel(ci);
        let mut row = vec![0.0f32; co_n * taps];
        for co in 0..co_n {
            let g = grad_out.channel(co);
            for tap in 0..taps {
                let dt = tap / (wy * wx);
                let dy = (tap % (wy * wx)) / wx;
                let dx = tap % wx;
                let mut acc = 0.0f64;
                for t in 0..x.t {
                    for y in 0..x.h {
                        let src_row = (t * x.h + y) * x.w;
                        let g_row = ((t * wt + dt) * oh + y * wy + dy) * ow + dx;
                        let mut partial = 0.0f32;
                        for xo in 0..x.w {
                            partial += src[src_row + xo] * g[g_row + xo * wx];
                        }
                        acc += partial as f64;
                    }
                }
                row[co * taps + tap] = acc as f32;
            }
        }
        row
    });
    for (ci, row) in rows.into_iter().enumerate() {
        grad_weights[ci * co_n * taps..(ci + 1) * co_n * taps].copy_from_slice(&row);
    }
    let mut grad_x = Tensor4::zeros(ci_n, x.t, x.h, x.w);
    parallel::for_each_chunk_mut(&mut grad_x.data, x.volume(), |ci, gx_ch| {
        for co in 0..co_n {
            let g = grad_out.channel(co);
            for tap in 0..taps {
                let w = kernel.weights[(ci * co_n + co) * taps + tap];
                if w == 0.0 {
                    continue;
                }
                let dt = tap / (wy * wx);
                let dy = (tap % (wy * wx)) / wx;
                let dx = tap % wx;
                for t in 0..x.t {
                    for y in 0..x.h {
                        let gx_row = (t * x.h + y) * x.w;
                        let g_row = ((t * wt + dt) * oh + y * wy + dy) * ow + dx;
                        for xo in 0..x.w {
                            gx_ch[gx_row + xo] += w * g[g_row + xo * wx];
                        }
                    }
                }
            }
        }
    });
    (grad_x, grad_weights, grad_bias)
}

/// Stack two tensors along the channel axis.
pub fn concat_channels(a: &Tensor4, b: &Tensor4) -> Tensor4 {
    assert_eq!((a.t, a.h, a.w), (b.t, b.h, b.w), "concat shapes");
    let mut out = Tensor4::zeros(a.c + b.c, a.t, a.h, a.w);
    out.data[..a.data.len()].copy_from_slice(&a.data);
    out.data[a.data.len()..].copy_from_slice(&b.data);
    out
}

/// Split a channel-concatenated gradient back into its two parts.
pub fn split_channels(g: &Tensor4, c_first: usize) -> (Tensor4, Tensor4) {
    let vol = g.volume();
    let first = Tensor4 {
        c: c_first,
        t: g.t,
        h: g.h,
        w: g.w,
        data: g.data[..c_first * vol].to_vec(),
    };
    let second = Tensor4 {
        c: g.c - c_first,
        t: g.t,
        h: g.h,
        w: g.w,
        data: g.data[c_first * vol..].to_vec(),
    };
    (first, second)
}
