//! Synthetic receive coils and self-calibrated sensitivity estimation.
//!
//! Simulated sensitivities are smooth Gaussian lobes centered on an
//! ncoils-gon around the FOV, normalized so the root-sum-of-squares is 1 at
//! every pixel; coil combination is RSS. Map estimation low-passes each coil
//! image through a small k-space-center window and RSS-normalizes, following
//! the self-calibration idea used for parallel imaging.

use num_complex::Complex32;

use super::fft::{fft2_centered, ifft2_centered};
use crate::tensor::ComplexFrame;
use crate::{Error, Result};

/// RSS-normalized sensitivity maps, one H*W magnitude map per coil.
pub fn coil_maps(h: usize, w: usize, ncoils: usize) -> Result<Vec<Vec<f32>>> {
    if ncoils == 0 {
        return Err(Error::Config("ncoils must be >= 1".into()));
    }
    if ncoils == 1 {
        return Ok(vec![vec![1.0; h * w]]);
    }
    let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
    let ring = 0.6 * (h.max(w)) as f64;
    let sigma = 0.55 * (h.max(w)) as f64;
    let mut raw = vec![vec![0.0f64; h * w]; ncoils];
    for (c, map) in raw.iter_mut().enumerate() {
        let phi = 2.0 * std::f64::consts::PI * c as f64 / ncoils as f64;
        let (my, mx) = (cy + ring * phi.sin(), cx + ring * phi.cos());
        for y in 0..h {
            for x in 0..w {
                let d2 = (y as f64 - my).powi(2) + (x as f64 - mx).powi(2);
                map[y * w + x] = (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    let mut maps = vec![vec![0.0f32; h * w]; ncoils];
    for i in 0..h * w {
        let rss = raw.iter().map(|m| m[i] * m[i]).sum::<f64>().sqrt();
        for (c, map) in raw.iter().enumerate() {
            maps[c][i] = (map[i] / rss) as f32;
        }
    }
    Ok(maps)
}

/// Multiply a frame by each sensitivity map.
pub fn simulate_coils(frame: &ComplexFrame, maps: &[Vec<f32>]) -> Vec<ComplexFrame> {
    maps.iter()
        .map(|m| {
            let data = frame.data().iter().zip(m).map(|(v, &s)| v * s).collect();
            ComplexFrame::from_vec(frame.height(), frame.width(), data).unwrap()
        })
        .collect()
}

/// Root-sum-of-squares combination over coils.
pub fn combine_coils_rss(frames: &[ComplexFrame]) -> Vec<f32> {
    assert!(!frames.is_empty());
    let n = frames[0].data().len();
    let mut out = vec![0.0f32; n];
    for (i, v) in out.iter_mut().enumerate() {
        let s: f64 = frames.iter().map(|f| f.data()[i].norm_sqr() as f64).sum();
        *v = s.sqrt() as f32;
    }
    out
}

/// Estimate sensitivity maps from per-coil images via a k-space-center
/// low-pass (disk of the given normalized radius) followed by RSS
/// normalization. Returns magnitude maps.
pub fn estimate_coil_maps(coil_images: &[ComplexFrame], radius: f64) -> Result<Vec<Vec<f32>>> {
    if coil_images.is_empty() {
        return Err(Error::Config("need at least one coil image".into()));
    }
    let (h, w) = (coil_images[0].height(), coil_images[0].width());
    let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
    let low: Vec<ComplexFrame> = coil_images
        .iter()
        .map(|img| {
            let mut k = fft2_centered(img);
            for y in 0..h {
                for x in 0..w {
                    let ky = (y as f64 - cy) / h as f64;
                    let kx = (x as f64 - cx) / w as f64;
                    if (ky * ky + kx * kx).sqrt() >= radius {
                        k.set(y, x, Complex32::ZERO);
                    }
                }
            }
            ifft2_centered(&k)
        })
        .collect();
    let mut maps = vec![vec![0.0f32; h * w]; low.len()];
    for i in 0..h * w {
        let rss: f64 = low.iter().map(|f| f.data()[i].norm_sqr() as f64).sum::<f64>().sqrt();
        for (c, f) in low.iter().enumerate() {
            maps[c][i] = if rss > 1e-12 { (f.data()[i].norm() as f64 / rss) as f32 } else { 0.0 };
        }
    }
    Ok(maps)
}
