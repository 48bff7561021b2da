//! Dense real and complex tensors used as the common image currency.
//!
//! A [`Cine`] is a real-valued 2D+time volume stored frame-major (T × H × W,
//! row-major within a frame). Values are `f32` on disk and in memory;
//! reductions accumulate in `f64`. Tensors are treated as immutable once they
//! cross a module boundary.

use num_complex::Complex32;

use crate::{Error, Result};

/// Real-valued 2D+time image series covering one cardiac cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cine {
    frames: usize,
    height: usize,
    width: usize,
    /// Milliseconds per frame.
    pub frame_dt_ms: f64,
    data: Vec<f32>,
}

impl Cine {
    pub fn zeros(frames: usize, height: usize, width: usize, frame_dt_ms: f64) -> Self {
        assert!(frames >= 1 && height >= 1 && width >= 1, "empty cine");
        Self { frames, height, width, frame_dt_ms, data: vec![0.0; frames * height * width] }
    }

    pub fn from_vec(
        frames: usize,
        height: usize,
        width: usize,
        frame_dt_ms: f64,
        data: Vec<f32>,
    ) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::Shape("cine dimensions must all be >= 1".into()));
        }
        if data.len() != frames * height * width {
            return Err(Error::Shape(format!(
                "cine data length {} does not match {}x{}x{}",
                data.len(),
                frames,
                height,
                width
            )));
        }
        Ok(Self { frames, height, width, frame_dt_ms, data })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frames, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> f32 {
        self.data[(t * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, v: f32) {
        self.data[(t * self.height + y) * self.width + x] = v;
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        let n = self.height * self.width;
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Min-max normalization over the whole 3D set: `(x - min) / (max - min)`.
    ///
    /// A constant cine maps to all zeros (blank padding frames occur in
    /// practice, so the degenerate case is not an error). Idempotent on its
    /// own output.
    pub fn normalize01(&self) -> Cine {
        let (lo, hi) = self.min_max();
        let mut out = self.clone();
        if hi > lo {
            let scale = 1.0 / (hi - lo);
            for v in &mut out.data {
                *v = (*v - lo) * scale;
            }
        } else {
            out.data.fill(0.0);
        }
        out
    }
}

/// Single complex-valued H × W frame, the intermediate of Fourier-domain ops.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    height: usize,
    width: usize,
    data: Vec<Complex32>,
}

impl ComplexFrame {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "empty frame");
        Self { height, width, data: vec![Complex32::ZERO; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<Complex32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "frame data length {} does not match {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_real(height: usize, width: usize, real: &[f32]) -> Result<Self> {
        if real.len() != height * width {
            return Err(Error::Shape("real data length mismatch".into()));
        }
        let data = real.iter().map(|&r| Complex32::new(r, 0.0)).collect();
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> Complex32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: Complex32) {
        self.data[y * self.width + x] = v;
    }

    pub fn magnitude(&self) -> Vec<f32> {
        self.data.iter().map(|c| c.norm()).collect()
    }
}

/// Complex-valued T × H × W stack, the iterate type of the GRASP solver.
#[derive(Debug, Clone)]
pub struct ComplexCine {
    frames: usize,
    height: usize,
    width: usize,
    data: Vec<Complex32>,
}

impl ComplexCine {
    pub fn zeros(frames: usize, height: usize, width: usize) -> Self {
        assert!(frames >= 1 && height >= 1 && width >= 1, "empty stack");
        Self { frames, height, width, data: vec![Complex32::ZERO; frames * height * width] }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }

    pub fn frame(&self, t: usize) -> &[Complex32] {
        let n = self.height * self.width;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex32] {
        let n = self.height * self.width;
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn set_frame(&mut self, t: usize, frame: &ComplexFrame) {
        assert_eq!((frame.height, frame.width), (self.height, self.width));
        self.frame_mut(t).copy_from_slice(frame.data());
    }

    pub fn frame_view(&self, t: usize) -> ComplexFrame {
        ComplexFrame::from_vec(self.height, self.width, self.frame(t).to_vec()).unwrap()
    }

    /// Magnitude cine |x|.
    pub fn magnitude(&self, frame_dt_ms: f64) -> Cine {
        let data = self.data.iter().map(|c| c.norm()).collect();
        Cine::from_vec(self.frames, self.height, self.width, frame_dt_ms, data).unwrap()
    }
}

/// Squared l2 norm with f64 accumulation.
pub fn norm_sq_c(data: &[Complex32]) -> f64 {
    data.iter().map(|c| c.norm_sqr() as f64).sum()
}

/// Re⟨a, b⟩ with f64 accumulation and a fixed (sequential) reduction order.
pub fn dot_re_c(a: &[Complex32], b: &[Complex32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += (x.re as f64) * (y.re as f64) + (x.im as f64) * (y.im as f64);
    }
    acc
}
