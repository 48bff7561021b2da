//! Centered 2D FFTs with unitary normalization.
//!
//! `fft2_centered` places DC at index (floor(H/2), floor(W/2)) and scales by
//! 1/sqrt(HW) in each direction, so the transform is unitary and Parseval
//! holds. Raw (unscaled, shift-free) transforms are exposed for the gridding
//! pipeline, which folds shifts and scaling into its own bookkeeping.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex32;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::tensor::ComplexFrame;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f32>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f32>> {
    PLANNER.with(|p| match direction {
        FftDirection::Forward => p.borrow_mut().plan_fft_forward(len),
        FftDirection::Inverse => p.borrow_mut().plan_fft_inverse(len),
    })
}

/// Unnormalized in-place 2D FFT over row-major `h` x `w` data.
pub fn fft2_raw(data: &mut [Complex32], h: usize, w: usize, direction: FftDirection) {
    assert_eq!(data.len(), h * w);
    let row_fft = plan(w, direction);
    let mut scratch = vec![Complex32::ZERO; row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(w) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    let col_fft = plan(h, direction);
    let mut col = vec![Complex32::ZERO; h];
    let mut scratch = vec![Complex32::ZERO; col_fft.get_inplace_scratch_len()];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process_with_scratch(&mut col, &mut scratch);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
}

/// Move DC from index 0 to floor(N/2) along both axes.
pub fn fftshift2(data: &mut [Complex32], h: usize, w: usize) {
    data.rotate_right((h / 2) * w);
    for row in data.chunks_exact_mut(w) {
        row.rotate_right(w / 2);
    }
}

/// Inverse of [`fftshift2`]: move index floor(N/2) to 0.
pub fn ifftshift2(data: &mut [Complex32], h: usize, w: usize) {
    data.rotate_left((h / 2) * w);
    for row in data.chunks_exact_mut(w) {
        row.rotate_left(w / 2);
    }
}

fn centered(frame: &ComplexFrame, direction: FftDirection) -> ComplexFrame {
    let (h, w) = (frame.height(), frame.width());
    let mut data = frame.data().to_vec();
    ifftshift2(&mut data, h, w);
    fft2_raw(&mut data, h, w, direction);
    fftshift2(&mut data, h, w);
    let scale = 1.0 / ((h * w) as f64).sqrt() as f32;
    for v in &mut data {
        *v *= scale;
    }
    ComplexFrame::from_vec(h, w, data).unwrap()
}

/// Unitary centered 2D FFT (image to k-space).
pub fn fft2_centered(frame: &ComplexFrame) -> ComplexFrame {
    centered(frame, FftDirection::Forward)
}

/// Unitary centered 2D inverse FFT (k-space to image).
pub fn ifft2_centered(frame: &ComplexFrame) -> ComplexFrame {
    centered(frame, FftDirection::Inverse)
}
