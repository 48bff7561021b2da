//! Paired (ground truth, aliased) dataset construction.
//!
//! Procedurally generated cardiac-like phantoms stand in for a clinical cine
//! library: a contracting "ventricle" ring with papillary dots over seeded
//! static background ellipses. Each sample runs the same pipeline the real
//! data would: spatial resample, temporal resample onto the real-time frame
//! grid, radial corruption at native resolution, center crop, interpolation
//! to a fixed frame count, then [0, 1] normalization of both branches.

use serde::{Deserialize, Serialize};

use crate::kspace::{corrupt_cine, RadialKSpace};
use crate::parallel;
use crate::rng::{stream, Seed};
use crate::tensor::Cine;
use crate::trajectory::TrajectorySpec;
use crate::{Error, Result};

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

/// Source cine temporal resolution in ms (typical breath-hold acquisition).
pub const SRC_FRAME_MS: f64 = 32.0;
/// Real-time frame interval in ms.
pub const REALTIME_FRAME_MS: f64 = 36.4;

/// Generator parameters for one phantom; all distributions are sampled
/// deterministically from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSpec {
    pub seed: Seed,
    /// Source matrix size (square).
    pub matrix: usize,
    /// Number of static background ellipses.
    pub n_structures: usize,
    /// Simulated R-R interval range in ms.
    pub rr_ms_range: (f64, f64),
    /// Ventricle outer radius as a fraction of the matrix.
    pub outer_radius_frac: (f64, f64),
    /// Myocardium wall thickness as a fraction of the matrix.
    pub wall_frac: (f64, f64),
    /// Fractional inner-radius reduction at systole.
    pub contraction_frac: (f64, f64),
    pub papillary_count: (usize, usize),
    /// Papillary dot radius as a fraction of the matrix.
    pub papillary_radius_frac: (f64, f64),
    /// Peak respiratory displacement in source pixels (0 = breath hold).
    pub breathing_amp_px: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            seed: Seed(0),
            matrix: 240,
            n_structures: 6,
            rr_ms_range: (600.0, 1200.0),
            outer_radius_frac: (0.20, 0.27),
            wall_frac: (0.06, 0.09),
            contraction_frac: (0.25, 0.40),
            papillary_count: (2, 4),
            papillary_radius_frac: (0.015, 0.03),
            breathing_amp_px: 0.0,
        }
    }
}

/// One background ellipse, axis-aligned in its own rotated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cy: f64,
    pub cx: f64,
    pub a: f64,
    pub b: f64,
    pub rot_rad: f64,
    pub intensity: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Papillary {
    /// Radial position as a fraction of the instantaneous inner radius.
    pub rho_frac: f64,
    pub angle_rad: f64,
    pub radius_px: f64,
}

/// Fully resolved phantom: every random draw materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomInstance {
    pub matrix: usize,
    pub rr_ms: f64,
    pub n_frames: usize,
    pub center: (f64, f64),
    pub outer_radius: f64,
    pub inner_radius_diastole: f64,
    pub contraction: f64,
    pub systole_phase: f64,
    pub papillary: Vec<Papillary>,
    pub ellipses: Vec<Ellipse>,
    pub breathing_amp_px: f64,
    pub breathing_phase: f64,
}

const INTENSITY_BODY: f32 = 0.22;
const INTENSITY_MYO: f32 = 0.85;
const INTENSITY_POOL: f32 = 0.50;
const INTENSITY_DOT: f32 = 0.95;
/// Sharpness of the systolic contraction bump (von-Mises style).
const CYCLE_KAPPA: f64 = 3.0;

fn uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    Uniform::new_inclusive(range.0, range.1).unwrap().sample(rng)
}

/// Draw every phantom parameter from the spec's seed.
pub fn resolve_phantom(spec: &PhantomSpec) -> PhantomInstance {
    let mut rng = stream(spec.seed, "phantom");
    let m = spec.matrix as f64;
    let rr_ms = uniform(&mut rng, spec.rr_ms_range);
    let n_frames = ((rr_ms / SRC_FRAME_MS).round() as usize).max(2);
    let jitter = 0.04 * m;
    let center = (
        m / 2.0 + uniform(&mut rng, (-jitter, jitter)),
        m / 2.0 + uniform(&mut rng, (-jitter, jitter)),
    );
    let outer_radius = uniform(&mut rng, spec.outer_radius_frac) * m;
    let wall = uniform(&mut rng, spec.wall_frac) * m;
    let inner_radius_diastole = (outer_radius - wall).max(2.0);
    let contraction = uniform(&mut rng, spec.contraction_frac);
    let systole_phase = uniform(&mut rng, (0.25, 0.45));
    let n_dots = rng.random_range(spec.papillary_count.0..=spec.papillary_count.1);
    let papillary = (0..n_dots)
        .map(|_| Papillary {
            rho_frac: uniform(&mut rng, (0.25, 0.60)),
            angle_rad: uniform(&mut rng, (0.0, std::f64::consts::TAU)),
            radius_px: uniform(&mut rng, spec.papillary_radius_frac) * m,
        })
        .collect();
    let mut ellipses = vec![Ellipse {
        cy: m / 2.0,
        cx: m / 2.0,
        a: 0.46 * m,
        b: 0.40 * m,
        rot_rad: uniform(&mut rng, (-0.3, 0.3)),
        intensity: INTENSITY_BODY,
    }];
    for _ in 0..spec.n_structures {
        ellipses.push(Ellipse {
            cy: uniform(&mut rng, (0.15 * m, 0.85 * m)),
            cx: uniform(&mut rng, (0.15 * m, 0.85 * m)),
            a: uniform(&mut rng, (0.04 * m, 0.16 * m)),
            b: uniform(&mut rng, (0.04 * m, 0.16 * m)),
            rot_rad: uniform(&mut rng, (0.0, std::f64::consts::PI)),
            intensity: uniform(&mut rng, (0.15, 0.45)) as f32,
        });
    }
    PhantomInstance {
        matrix: spec.matrix,
        rr_ms,
        n_frames,
        center,
        outer_radius,
        inner_radius_diastole,
        contraction,
        systole_phase,
        papillary,
        ellipses,
        breathing_amp_px: spec.breathing_amp_px,
        breathing_phase: uniform(&mut rng, (0.0, 1.0)),
    }
}

/// Smooth periodic contraction bump, 1 at the systolic phase.
pub fn contraction_bump(phase: f64, systole_phase: f64) -> f64 {
    (CYCLE_KAPPA * ((std::f64::consts::TAU * (phase - systole_phase)).cos() - 1.0)).exp()
}

/// 1-pixel anti-alias coverage from a signed distance (positive outside).
fn coverage(dist_outside: f64) -> f32 {
    (0.5 - dist_outside).clamp(0.0, 1.0) as f32
}

fn paint_over(pixel: &mut f32, cov: f32, intensity: f32) {
    *pixel = *pixel * (1.0 - cov) + intensity * cov;
}

/// Render a resolved phantom to a source-resolution cine covering exactly
/// one cardiac cycle. Deterministic.
pub fn render_phantom(inst: &PhantomInstance) -> Cine {
    let m = inst.matrix;
    let frame_dt = inst.rr_ms / inst.n_frames as f64;
    let mut cine = Cine::zeros(inst.n_frames, m, m, frame_dt);
    for t in 0..inst.n_frames {
        let phase = t as f64 / inst.n_frames as f64;
        let bump = contraction_bump(phase, inst.systole_phase);
        let r_in = inst.inner_radius_diastole * (1.0 - inst.contraction * bump);
        let breath = inst.breathing_amp_px
            * (std::f64::consts::TAU * (0.35 * phase + inst.breathing_phase)).sin();
        let (cy, cx) = (inst.center.0 + breath, inst.center.1);
        let frame = cine.frame_mut(t);
        for y in 0..m {
            for x in 0..m {
                let px = &mut frame[y * m + x];
                *px = 0.05;
                for e in &inst.ellipses {
                    let dy = y as f64 - (e.cy + breath);
                    let dx = x as f64 - e.cx;
                    let (s, c) = e.rot_rad.sin_cos();
                    let u = dx * c + dy * s;
                    let v = -dx * s + dy * c;
                    let q = ((u / e.a).powi(2) + (v / e.b).powi(2)).sqrt();
                    paint_over(px, coverage((q - 1.0) * e.a.min(e.b)), e.intensity);
                }
                let dy = y as f64 - cy;
                let dx = x as f64 - cx;
                let r = (dy * dy + dx * dx).sqrt();
                paint_over(px, coverage(r - inst.outer_radius), INTENSITY_MYO);
                paint_over(px, coverage(r - r_in), INTENSITY_POOL);
                for dot in &inst.papillary {
                    let (ds, dc) = dot.angle_rad.sin_cos();
                    let dot_y = cy + dot.rho_frac * r_in * ds;
                    let dot_x = cx + dot.rho_frac * r_in * dc;
                    let dr = ((y as f64 - dot_y).powi(2) + (x as f64 - dot_x).powi(2)).sqrt();
                    paint_over(px, coverage(dr - dot.radius_px), INTENSITY_DOT);
                }
            }
        }
    }
    cine
}

/// Resolve and render in one step.
pub fn generate_phantom(spec: &PhantomSpec) -> (Cine, PhantomInstance) {
    let inst = resolve_phantom(spec);
    (render_phantom(&inst), inst)
}

/// Bilinear spatial resample of each frame to `target x target`.
pub fn resample_spatial(src: &Cine, target: usize) -> Cine {
    let (t, h, w) = src.shape();
    let mut out = Cine::zeros(t, target, target, src.frame_dt_ms);
    for f in 0..t {
        let sf = src.frame(f);
        let of = out.frame_mut(f);
        for y in 0..target {
            let ys = ((y as f64 + 0.5) * h as f64 / target as f64 - 0.5).clamp(0.0, (h - 1) as f64);
            let y0 = ys.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let wy = (ys - y0 as f64) as f32;
            for x in 0..target {
                let xs =
                    ((x as f64 + 0.5) * w as f64 / target as f64 - 0.5).clamp(0.0, (w - 1) as f64);
                let x0 = xs.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let wx = (xs - x0 as f64) as f32;
                let top = sf[y0 * w + x0] + wx * (sf[y0 * w + x1] - sf[y0 * w + x0]);
                let bot = sf[y1 * w + x0] + wx * (sf[y1 * w + x1] - sf[y1 * w + x0]);
                of[y * target + x] = top + wy * (bot - top);
            }
        }
    }
    out
}

/// Periodic linear temporal resample onto the real-time frame grid:
/// frame times j * frame_dt for j < floor(rr / frame_dt). The source covers
/// exactly one cardiac cycle, so interpolation wraps from the last frame
/// back to the first.
pub fn resample_temporal(src: &Cine, rr_ms: f64, frame_dt_ms: f64) -> Result<Cine> {
    if rr_ms < frame_dt_ms {
        return Err(Error::Config(format!(
            "R-R interval {} ms shorter than one frame ({} ms)",
            rr_ms, frame_dt_ms
        )));
    }
    let (t, h, w) = src.shape();
    let n_out = (rr_ms / frame_dt_ms).floor() as usize;
    let dt_src = rr_ms / t as f64;
    let mut out = Cine::zeros(n_out, h, w, frame_dt_ms);
    for j in 0..n_out {
        let pos = (j as f64 * frame_dt_ms) / dt_src;
        let i0 = pos.floor() as usize % t;
        let i1 = (i0 + 1) % t;
        let wgt = (pos - pos.floor()) as f32;
        let (s0, s1) = (src.frame(i0), src.frame(i1));
        let of = out.frame_mut(j);
        // lerp in a + w (b - a) form so constants are preserved bit-exactly
        for ((o, &a), &b) in of.iter_mut().zip(s0).zip(s1) {
            *o = a + wgt * (b - a);
        }
    }
    Ok(out)
}

/// Spatial resample to the acquisition matrix followed by temporal resample
/// to the real-time frame grid.
pub fn resample_pipeline(
    src: &Cine,
    rr_ms: f64,
    target_matrix: usize,
    frame_dt_ms: f64,
) -> Result<Cine> {
    resample_temporal(&resample_spatial(src, target_matrix), rr_ms, frame_dt_ms)
}

/// Axis-aligned crop of `size x size` centered at the image center plus
/// `(dy, dx)`.
pub fn crop_center(cine: &Cine, size: usize, shift: (i32, i32)) -> Result<Cine> {
    let (t, h, w) = cine.shape();
    let y0 = (h as i64 - size as i64) / 2 + shift.0 as i64;
    let x0 = (w as i64 - size as i64) / 2 + shift.1 as i64;
    if y0 < 0 || x0 < 0 || y0 + size as i64 > h as i64 || x0 + size as i64 > w as i64 {
        return Err(Error::Shape(format!(
            "crop {}x{} at shift ({}, {}) exceeds {}x{} source",
            size, size, shift.0, shift.1, h, w
        )));
    }
    let (y0, x0) = (y0 as usize, x0 as usize);
    let mut out = Cine::zeros(t, size, size, cine.frame_dt_ms);
    for f in 0..t {
        let sf = cine.frame(f);
        let of = out.frame_mut(f);
        for y in 0..size {
            of[y * size..(y + 1) * size]
                .copy_from_slice(&sf[(y0 + y) * w + x0..(y0 + y) * w + x0 + size]);
        }
    }
    Ok(out)
}

/// Linear interpolation to a fixed frame count on normalized time [0, 1];
/// endpoints are preserved exactly.
pub fn interp_frames(cine: &Cine, target_frames: usize) -> Result<Cine> {
    let (t, h, w) = cine.shape();
    if t < 2 {
        return Err(Error::Shape("temporal interpolation needs at least 2 frames".into()));
    }
    if t == target_frames {
        return Ok(cine.clone());
    }
    let dt_out = cine.frame_dt_ms * (t - 1) as f64 / (target_frames - 1) as f64;
    let mut out = Cine::zeros(target_frames, h, w, dt_out);
    for j in 0..target_frames {
        let pos = j as f64 * (t - 1) as f64 / (target_frames - 1) as f64;
        let i0 = (pos.floor() as usize).min(t - 1);
        let i1 = (i0 + 1).min(t - 1);
        let wgt = (pos - i0 as f64) as f32;
        let (s0, s1) = (cine.frame(i0), cine.frame(i1));
        let of = out.frame_mut(j);
        for ((o, &a), &b) in of.iter_mut().zip(s0).zip(s1) {
            *o = a + wgt * (b - a);
        }
    }
    Ok(out)
}

/// Add white Gaussian noise at a target SNR (dB, amplitude-ratio convention:
/// 20 log10(rms(signal)/sigma)), clamping the result to non-negative values.
/// No renormalization is applied.
pub fn add_noise_to_snr(cine: &Cine, snr_db: f64, seed: Seed) -> Result<Cine> {
    let rms = {
        let s: f64 = cine.data().iter().map(|&v| (v as f64).powi(2)).sum();
        (s / cine.data().len() as f64).sqrt()
    };
    if rms == 0.0 {
        return Err(Error::Numerical("cannot set SNR on an all-zero cine".into()));
    }
    if !snr_db.is_finite() {
        return Err(Error::Config("snr_db must be finite".into()));
    }
    let sigma = rms * 10f64.powf(-snr_db / 20.0);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = stream(seed, "noise");
    let mut out = cine.clone();
    for v in out.data_mut() {
        *v = (*v as f64 + normal.sample(&mut rng)).max(0.0) as f32;
    }
    Ok(out)
}

/// Geometric/sampling parameters of the resample-crop-interpolate pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineParams {
    /// Matrix after spatial resampling (acquisition matrix).
    pub resample_matrix: usize,
    pub frame_dt_ms: f64,
    pub crop_size: usize,
    pub target_frames: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            resample_matrix: 192,
            frame_dt_ms: REALTIME_FRAME_MS,
            crop_size: 128,
            target_frames: 20,
        }
    }
}

/// Everything needed to build one paired dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub traj: TrajectorySpec,
    pub phantom: PhantomSpec,
    pub pipeline: PipelineParams,
    pub ncoils: usize,
    pub save_kspace: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let pipeline = PipelineParams::default();
        // 2x readout oversampling keeps the radial quadrature comfortably
        // sampled during corruption.
        let traj = TrajectorySpec::new(
            crate::trajectory::Pattern::TgaRot,
            2 * pipeline.resample_matrix,
        );
        Self {
            n_train: 32,
            n_test: 8,
            traj,
            phantom: PhantomSpec::default(),
            pipeline,
            ncoils: 1,
            save_kspace: true,
        }
    }
}

/// One (truth, aliased) pair plus provenance.
#[derive(Debug, Clone)]
pub struct PairedSample {
    pub truth: Cine,
    pub aliased: Cine,
    pub kspace: Option<RadialKSpace>,
    pub traj: TrajectorySpec,
    pub phantom: PhantomInstance,
    pub crop_shift: (i32, i32),
    pub index: usize,
}

/// Ordered record of pipeline stages, used to assert the corruption happens
/// at native resolution before cropping and frame interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineStage {
    Generated { frames: usize, matrix: usize },
    Resampled { frames: usize, matrix: usize },
    Corrupted { frames: usize, matrix: usize },
    Cropped { frames: usize, matrix: usize },
    Interpolated { frames: usize, matrix: usize },
    Normalized,
}

pub type PipelineTrace = Vec<PipelineStage>;

/// Build sample `index` of a dataset deterministically.
pub fn build_sample(cfg: &DatasetConfig, dataset_seed: Seed, index: usize) -> Result<PairedSample> {
    build_sample_inner(cfg, dataset_seed, index, None)
}

pub fn build_sample_traced(
    cfg: &DatasetConfig,
    dataset_seed: Seed,
    index: usize,
) -> Result<(PairedSample, PipelineTrace)> {
    let mut trace = PipelineTrace::new();
    let sample = build_sample_inner(cfg, dataset_seed, index, Some(&mut trace))?;
    Ok((sample, trace))
}

fn build_sample_inner(
    cfg: &DatasetConfig,
    dataset_seed: Seed,
    index: usize,
    mut trace: Option<&mut PipelineTrace>,
) -> Result<PairedSample> {
    let mut push = |stage: PipelineStage| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(stage);
        }
    };
    let mut phantom_spec = cfg.phantom.clone();
    phantom_spec.seed = dataset_seed.child_index("datagen/sample", index as u64);
    let (src, instance) = generate_phantom(&phantom_spec);
    push(PipelineStage::Generated { frames: src.frames(), matrix: src.height() });

    let resampled = resample_pipeline(
        &src,
        instance.rr_ms,
        cfg.pipeline.resample_matrix,
        cfg.pipeline.frame_dt_ms,
    )?;
    push(PipelineStage::Resampled { frames: resampled.frames(), matrix: resampled.height() });

    let crop_shift = (0, 0);
    // Truth branch: crop -> interpolate -> normalize.
    let truth = crop_center(&resampled, cfg.pipeline.crop_size, crop_shift)?;
    let truth = interp_frames(&truth, cfg.pipeline.target_frames)?;
    let truth = truth.normalize01();

    // Aliased branch: corrupt at native matrix and frame count first.
    let (aliased_native, kspace) = corrupt_cine(&resampled, &cfg.traj, cfg.ncoils)?;
    push(PipelineStage::Corrupted {
        frames: aliased_native.frames(),
        matrix: aliased_native.height(),
    });
    let aliased = crop_center(&aliased_native, cfg.pipeline.crop_size, crop_shift)?;
    push(PipelineStage::Cropped { frames: aliased.frames(), matrix: aliased.height() });
    let aliased = interp_frames(&aliased, cfg.pipeline.target_frames)?;
    push(PipelineStage::Interpolated { frames: aliased.frames(), matrix: aliased.height() });
    let aliased = aliased.normalize01();
    push(PipelineStage::Normalized);

    Ok(PairedSample {
        truth,
        aliased,
        kspace: if cfg.save_kspace { Some(kspace) } else { None },
        traj: cfg.traj.clone(),
        phantom: instance,
        crop_shift,
        index,
    })
}

/// Build the train and test splits; samples are independent and processed
/// concurrently, each deterministic in (seed, index).
pub fn build_dataset(
    cfg: &DatasetConfig,
    seed: Seed,
) -> Result<(Vec<PairedSample>, Vec<PairedSample>)> {
    let total = cfg.n_train + cfg.n_test;
    let mut samples: Vec<PairedSample> =
        parallel::map_indexed(total, |i| build_sample(cfg, seed, i))
            .into_iter()
            .collect::<Result<_>>()?;
    let test = samples.split_off(cfg.n_train);
    Ok((samples, test))
}
