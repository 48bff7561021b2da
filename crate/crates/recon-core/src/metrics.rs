//! Quantitative evaluation: RMSE, SSIM, polynomial-fit edge sharpness,
//! Bland-Altman agreement, temporal flicker, and wall-clock timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::tensor::Cine;
use crate::{Error, Result};

/// Root mean square error over all voxels of two equally shaped cines.
pub fn rmse(a: &Cine, b: &Cine) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("rmse shapes {:?} vs {:?}", a.shape(), b.shape())));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum();
    Ok((sum / a.data().len() as f64).sqrt())
}

/// SSIM parameters; the standard constants, frozen so reports are comparable
/// across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of the inputs.
    pub data_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, data_range: 1.0 }
    }
}

fn gaussian_window(n: usize, sigma: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let mut w: Vec<f64> = (0..n)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// SSIM of one frame pair with a Gaussian window, averaged over all valid
/// (fully interior) window positions.
pub fn ssim_frame(a: &[f32], b: &[f32], h: usize, w: usize, cfg: &SsimConfig) -> Result<f64> {
    let n = cfg.window;
    if h < n || w < n {
        return Err(Error::Shape(format!("frame {}x{} smaller than {0}x{0} SSIM window", h, n)));
    }
    let win = gaussian_window(n, cfg.sigma);
    let c1 = (cfg.k1 * cfg.data_range).powi(2);
    let c2 = (cfg.k2 * cfg.data_range).powi(2);
    let mut total = 0.0f64;
    let mut count = 0usize;
    for y0 in 0..=(h - n) {
        for x0 in 0..=(w - n) {
            let mut mu_a = 0.0f64;
            let mut mu_b = 0.0f64;
            let mut aa = 0.0f64;
            let mut bb = 0.0f64;
            let mut ab = 0.0f64;
            for dy in 0..n {
                let row = (y0 + dy) * w + x0;
                let wy = win[dy];
                for dx in 0..n {
                    let wgt = wy * win[dx];
                    let va = a[row + dx] as f64;
                    let vb = b[row + dx] as f64;
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Mean SSIM: per-frame SSIM averaged over frames.
pub fn ssim(a: &Cine, b: &Cine) -> Result<f64> {
    ssim_with(a, b, &SsimConfig::default())
}

pub fn ssim_with(a: &Cine, b: &Cine, cfg: &SsimConfig) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("ssim shapes {:?} vs {:?}", a.shape(), b.shape())));
    }
    let (t, h, w) = a.shape();
    let mut total = 0.0f64;
    for f in 0..t {
        total += ssim_frame(a.frame(f), b.frame(f), h, w, cfg)?;
    }
    Ok(total / t as f64)
}

/// Straight-line intensity profile, sampled bilinearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineProfile {
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub n_samples: usize,
}

impl LineProfile {
    pub fn new(start: (f64, f64), end: (f64, f64), n_samples: usize) -> Result<Self> {
        if n_samples < 8 {
            return Err(Error::Config("profile needs at least 8 samples".into()));
        }
        Ok(Self { start, end, n_samples })
    }

    /// Bilinear samples along the segment (coordinates are (y, x) pixels).
    pub fn sample(&self, frame: &[f32], h: usize, w: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n_samples);
        for i in 0..self.n_samples {
            let s = i as f64 / (self.n_samples - 1) as f64;
            let y = self.start.0 + s * (self.end.0 - self.start.0);
            let x = self.start.1 + s * (self.end.1 - self.start.1);
            if y < 0.0 || x < 0.0 || y > (h - 1) as f64 || x > (w - 1) as f64 {
                return Err(Error::Shape(format!("profile point ({:.1}, {:.1}) outside frame", y, x)));
            }
            let (y0, x0) = (y.floor() as usize, x.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
            let (wy, wx) = (y - y0 as f64, x - x0 as f64);
            let top = frame[y0 * w + x0] as f64 + wx * (frame[y0 * w + x1] - frame[y0 * w + x0]) as f64;
            let bot = frame[y1 * w + x0] as f64 + wx * (frame[y1 * w + x1] - frame[y1 * w + x0]) as f64;
            out.push(top + wy * (bot - top));
        }
        Ok(out)
    }
}

/// Fit a degree-`deg` polynomial to (s_i, y_i) with s in [0, 1] using a
/// Chebyshev basis (well conditioned where a raw monomial fit is not) and
/// return the coefficients in that basis.
fn chebyshev_fit(ys: &[f64], deg: usize) -> Vec<f64> {
    let n = ys.len();
    let m = deg + 1;
    // design matrix rows: T_k(2s - 1)
    let mut basis = vec![0.0f64; n * m];
    for (i, row) in basis.chunks_mut(m).enumerate() {
        let u = 2.0 * (i as f64 / (n - 1) as f64) - 1.0;
        row[0] = 1.0;
        if m > 1 {
            row[1] = u;
        }
        for k in 2..m {
            row[k] = 2.0 * u * row[k - 1] - row[k - 2];
        }
    }
    // normal equations, solved by Cholesky
    let mut ata = vec![0.0f64; m * m];
    let mut aty = vec![0.0f64; m];
    for (i, row) in basis.chunks(m).enumerate() {
        for j in 0..m {
            aty[j] += row[j] * ys[i];
            for k in j..m {
                ata[j * m + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            ata[j * m + k] = ata[k * m + j];
        }
        // tiny ridge keeps the factorization stable on degenerate profiles
        ata[j * m + j] += 1e-12;
    }
    cholesky_solve(&mut ata, &mut aty, m);
    aty
}

fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                a[i * n + j] = s.max(1e-300).sqrt();
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
}

/// Evaluate the derivative (w.r.t. s in [0, 1]) of a Chebyshev series at u.
/// T_k'(u) = k U_{k-1}(u); the chain rule for u = 2s - 1 contributes a
/// factor 2.
fn cheb_series_derivative(coef: &[f64], u: f64) -> f64 {
    let mut du = 0.0f64;
    // U_{k-1} via recurrence
    let mut u_prev = 1.0; // U_0
    let mut u_cur = 2.0 * u; // U_1
    for (k, &c) in coef.iter().enumerate().skip(1) {
        let uk1 = match k {
            1 => 1.0,
            2 => 2.0 * u,
            _ => {
                let next = 2.0 * u * u_cur - u_prev;
                u_prev = u_cur;
                u_cur = next;
                next
            }
        };
        du += c * k as f64 * uk1;
    }
    2.0 * du
}

const EDGE_FIT_DEGREE: usize = 10;

/// Edge sharpness of one frame: sample a profile, min-max normalize, fit a
/// degree-10 polynomial over normalized arclength [0, 1], differentiate
/// analytically, and return the maximum |derivative|.
pub fn edge_sharpness(frame: &[f32], h: usize, w: usize, profile: &LineProfile) -> Result<f64> {
    let raw = profile.sample(frame, h, w)?;
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        return Err(Error::Numerical("constant profile has no defined edge sharpness".into()));
    }
    let norm: Vec<f64> = raw.iter().map(|&v| (v - lo) / (hi - lo)).collect();
    let coef = chebyshev_fit(&norm, EDGE_FIT_DEGREE);
    let mut max_abs = 0.0f64;
    for i in 0..=1000 {
        let s = i as f64 / 1000.0;
        let d = cheb_series_derivative(&coef, 2.0 * s - 1.0).abs();
        max_abs = max_abs.max(d);
    }
    Ok(max_abs)
}

/// Cine-level edge sharpness: the average of the per-frame scores over the
/// supplied profiles (six ring crossings on phantoms).
pub fn edge_sharpness_cine(cine: &Cine, profiles: &[LineProfile]) -> Result<f64> {
    let (t, h, w) = cine.shape();
    let mut total = 0.0f64;
    let mut count = 0usize;
    for f in 0..t {
        for p in profiles {
            total += edge_sharpness(cine.frame(f), h, w, p)?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Config("no profiles supplied".into()));
    }
    Ok(total / count as f64)
}

/// Six evenly rotated radial profiles crossing a ring of the given radius.
pub fn ring_profiles(
    center: (f64, f64),
    ring_radius: f64,
    profile_len_px: f64,
    n_samples: usize,
) -> Result<Vec<LineProfile>> {
    (0..6)
        .map(|i| {
            let theta = i as f64 * std::f64::consts::PI / 6.0;
            let (s, c) = theta.sin_cos();
            let r0 = ring_radius - profile_len_px / 2.0;
            let r1 = ring_radius + profile_len_px / 2.0;
            LineProfile::new(
                (center.0 + r0 * s, center.1 + r0 * c),
                (center.0 + r1 * s, center.1 + r1 * c),
                n_samples,
            )
        })
        .collect()
}

/// Bland-Altman agreement: bias = mean(test - ref), limits of agreement =
/// bias +- 2 sd (sample standard deviation, n - 1).
pub fn bland_altman(ref_vals: &[f64], test_vals: &[f64]) -> Result<(f64, f64, f64)> {
    if ref_vals.len() != test_vals.len() {
        return Err(Error::Shape("bland_altman needs equal-length inputs".into()));
    }
    let n = ref_vals.len();
    if n < 2 {
        return Err(Error::Config("bland_altman needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = test_vals.iter().zip(ref_vals).map(|(t, r)| t - r).collect();
    let bias = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - bias).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    Ok((bias, bias - 2.0 * sd, bias + 2.0 * sd))
}

/// Temporal flicker: mean squared second difference over time,
/// mean_p mean_t (x[t+1] - 2 x[t] + x[t-1])^2. Zero for anything linear in
/// time.
pub fn flicker_metric(cine: &Cine) -> Result<f64> {
    let (t, h, w) = cine.shape();
    if t < 3 {
        return Err(Error::Shape("flicker metric needs at least 3 frames".into()));
    }
    let n = h * w;
    let mut total = 0.0f64;
    for f in 1..t - 1 {
        let (prev, cur, next) = (cine.frame(f - 1), cine.frame(f), cine.frame(f + 1));
        for i in 0..n {
            let d = (next[i] - 2.0 * cur[i] + prev[i]) as f64;
            total += d * d;
        }
    }
    Ok(total / ((t - 2) * n) as f64)
}

/// Run a closure and return its result plus wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Run a closure `runs` times and report (last result, min, median) seconds.
pub fn timed_repeated<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, f64, f64) {
    assert!(runs >= 1);
    let mut times = Vec::with_capacity(runs);
    let mut out = None;
    for _ in 0..runs {
        let (v, t) = timed(&mut f);
        out = Some(v);
        times.push(t);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = times[0];
    let median = times[times.len() / 2];
    (out.unwrap(), min, median)
}

/// One row of a metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub pattern: String,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub rmse: f64,
    pub ssim: f64,
    pub edge_sharpness: f64,
    pub wall_time_s: f64,
}

/// Named scalar metrics keyed by method/pattern/sweep point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    /// RFC-4180 style CSV with a header row.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record([
            "method",
            "pattern",
            "sweep_axis",
            "sweep_value",
            "rmse",
            "ssim",
            "edge_sharpness",
            "wall_time_s",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            wtr.write_record([
                r.method.clone(),
                r.pattern.clone(),
                r.sweep_axis.clone(),
                format!("{}", r.sweep_value),
                format!("{}", r.rmse),
                format!("{}", r.ssim),
                format!("{}", r.edge_sharpness),
                format!("{}", r.wall_time_s),
            ])
            .map_err(csv_err)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cine_from_fn(t: usize, n: usize, f: impl Fn(usize, usize, usize) -> f32) -> Cine {
        let mut c = Cine::zeros(t, n, n, 1.0);
        for fr in 0..t {
            for y in 0..n {
                for x in 0..n {
                    c.set(fr, y, x, f(fr, y, x));
                }
            }
        }
        c
    }

    #[test]
    fn rmse_basics() {
        let a = cine_from_fn(2, 16, |_, y, x| (y + x) as f32 * 0.01);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        for v in b.data_mut() {
            *v += 0.05;
        }
        assert!((rmse(&a, &b).unwrap() - 0.05).abs() < 1e-6);
        assert!((rmse(&a, &b).unwrap() - rmse(&b, &a).unwrap()).abs() < 1e-12);
        let c = Cine::zeros(2, 8, 8, 1.0);
        assert!(rmse(&a, &c).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = cine_from_fn(2, 24, |f, y, x| ((y * x + f) % 7) as f32 / 7.0);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let b = cine_from_fn(2, 24, |f, y, x| ((y + x * 2 + f) % 5) as f32 / 5.0);
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-6);
        assert!(ab < 1.0);
    }

    #[test]
    fn ssim_matches_reference_scalar_implementation() {
        // independent direct implementation over valid windows
        fn reference_ssim(a: &Cine, b: &Cine) -> f64 {
            let (t, h, w) = a.shape();
            let n = 11;
            let sigma = 1.5f64;
            let c = (n as f64 - 1.0) / 2.0;
            let mut win = vec![0.0f64; n * n];
            let mut sum = 0.0;
            for y in 0..n {
                for x in 0..n {
                    let v = (-(((y as f64 - c).powi(2) + (x as f64 - c).powi(2))
                        / (2.0 * sigma * sigma)))
                        .exp();
                    win[y * n + x] = v;
                    sum += v;
                }
            }
            win.iter_mut().for_each(|v| *v /= sum);
            let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
            let mut total = 0.0;
            let mut count = 0;
            for f in 0..t {
                let fa = a.frame(f);
                let fb = b.frame(f);
                for y0 in 0..=(h - n) {
                    for x0 in 0..=(w - n) {
                        let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                        for dy in 0..n {
                            for dx in 0..n {
                                let wgt = win[dy * n + dx];
                                let va = fa[(y0 + dy) * w + x0 + dx] as f64;
                                let vb = fb[(y0 + dy) * w + x0 + dx] as f64;
                                ma += wgt * va;
                                mb += wgt * vb;
                                aa += wgt * va * va;
                                bb += wgt * vb * vb;
                                ab += wgt * va * vb;
                            }
                        }
                        total += ((2.0 * ma * mb + c1) * (2.0 * (ab - ma * mb) + c2))
                            / ((ma * ma + mb * mb + c1)
                                * ((aa - ma * ma) + (bb - mb * mb) + c2));
                        count += 1;
                    }
                }
            }
            total / count as f64
        }
        let a = cine_from_fn(1, 20, |_, y, x| if (y / 3 + x / 3) % 2 == 0 { 1.0 } else { 0.0 });
        let mut inv = a.clone();
        for v in inv.data_mut() {
            *v = 1.0 - *v;
        }
        let ours = ssim(&a, &inv).unwrap();
        let reference = reference_ssim(&a, &inv);
        assert!((ours - reference).abs() < 1e-9, "{} vs {}", ours, reference);
        // inverted binary structure: strongly anti-correlated
        assert!(ours < 0.2, "ssim(x, 1-x) = {}", ours);
    }

    #[test]
    fn ssim_rejects_small_frames() {
        let a = Cine::zeros(1, 8, 8, 1.0);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn edge_sharpness_monotone_in_blur() {
        // step edge blurred over w pixels: sharper edge -> larger max slope
        let step_frame = |blur: f64| -> Vec<f32> {
            let n = 32;
            let mut f = vec![0.0f32; n * n];
            for y in 0..n {
                for x in 0..n {
                    let d = x as f64 - 16.0;
                    f[y * n + x] = (0.5 + 0.5 * (d / blur).tanh()) as f32;
                }
            }
            f
        };
        let profile = LineProfile::new((16.0, 8.0), (16.0, 24.0), 33).unwrap();
        let scores: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&b| edge_sharpness(&step_frame(b), 32, 32, &profile).unwrap())
            .collect();
        assert!(scores[0] > scores[1] && scores[1] > scores[2], "{:?}", scores);
    }

    #[test]
    fn edge_sharpness_linear_ramp_slope() {
        let n = 32;
        let mut f = vec![0.0f32; n * n];
        for y in 0..n {
            for x in 0..n {
                f[y * n + x] = x as f32 / (n - 1) as f32;
            }
        }
        let profile = LineProfile::new((16.0, 4.0), (16.0, 28.0), 33).unwrap();
        let score = edge_sharpness(&f, n, n, &profile).unwrap();
        // a linear profile normalized to [0,1] over arclength [0,1] has
        // slope 1; allow polynomial edge wiggle
        assert!((score - 1.0).abs() < 0.1, "score {}", score);
    }

    #[test]
    fn edge_sharpness_affine_invariant() {
        let n = 32;
        let mut f = vec![0.0f32; n * n];
        for y in 0..n {
            for x in 0..n {
                let d = x as f64 - 16.0;
                f[y * n + x] = (0.5 + 0.5 * (d / 2.0).tanh()) as f32;
            }
        }
        let scaled: Vec<f32> = f.iter().map(|&v| 3.7 * v + 0.2).collect();
        let profile = LineProfile::new((16.0, 8.0), (16.0, 24.0), 33).unwrap();
        let a = edge_sharpness(&f, n, n, &profile).unwrap();
        let b = edge_sharpness(&scaled, n, n, &profile).unwrap();
        assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn edge_sharpness_constant_profile_errors() {
        let f = vec![0.5f32; 32 * 32];
        let profile = LineProfile::new((16.0, 8.0), (16.0, 24.0), 33).unwrap();
        assert!(edge_sharpness(&f, 32, 32, &profile).is_err());
    }

    #[test]
    fn bland_altman_values() {
        let (bias, lo, hi) = bland_altman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((bias, lo, hi), (0.0, 0.0, 0.0));
        // d = {1, 3}: bias 2, sd sqrt(2), loa 2 -+ 2 sqrt(2)
        let (bias, lo, hi) = bland_altman(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        assert!((bias - 2.0).abs() < 1e-12);
        assert!((lo - (2.0 - 2.0 * 2.0f64.sqrt())).abs() < 1e-12);
        assert!((hi - (2.0 + 2.0 * 2.0f64.sqrt())).abs() < 1e-12);
        assert!(bland_altman(&[1.0], &[1.0]).is_err());
        assert!(bland_altman(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn flicker_metric_cases() {
        let constant = cine_from_fn(5, 4, |_, _, _| 0.3);
        assert_eq!(flicker_metric(&constant).unwrap(), 0.0);
        let linear = cine_from_fn(5, 4, |f, _, _| f as f32 * 0.1);
        assert!(flicker_metric(&linear).unwrap() < 1e-12);
        // alternating +-a: second difference is -+4a, squared 16 a^2
        let a = 0.25f32;
        let alt = cine_from_fn(6, 4, |f, _, _| if f % 2 == 0 { a } else { -a });
        let expect = 16.0 * (a as f64).powi(2);
        assert!((flicker_metric(&alt).unwrap() - expect).abs() < 1e-9);
        assert!(flicker_metric(&cine_from_fn(2, 4, |_, _, _| 0.0)).is_err());
    }

    #[test]
    fn timing_harness() {
        let (v, t) = timed(|| 21 * 2);
        assert_eq!(v, 42);
        assert!(t >= 0.0);
        let (v, min, median) = timed_repeated(5, || (0..1000).sum::<usize>());
        assert_eq!(v, 499500);
        assert!(min <= median);
    }

    #[test]
    fn report_csv_layout() {
        let mut report = MetricReport::default();
        report.push(MetricRow {
            method: "unet".into(),
            pattern: "TGA_ROT".into(),
            sweep_axis: "".into(),
            sweep_value: 0.0,
            rmse: 0.042,
            ssim: 0.87,
            edge_sharpness: 0.55,
            wall_time_s: 0.15,
        });
        let csv = report.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "method,pattern,sweep_axis,sweep_value,rmse,ssim,edge_sharpness,wall_time_s"
        );
        assert!(lines.next().unwrap().starts_with("unet,TGA_ROT,"));
    }
}
