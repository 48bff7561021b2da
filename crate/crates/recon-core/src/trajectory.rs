//! Spoke angle tables and k-space coordinates for radial sampling.
//!
//! Four patterns are supported: a regular scheme and a tiny-golden-angle
//! scheme, each with and without frame-to-frame rotation. Angles are kept in
//! degrees (f64) and converted to radians only inside trig calls; the
//! golden-angle counter is an exact integer multiplied once by the angle
//! increment, so no drift accumulates over long acquisitions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Radial sampling pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pattern {
    /// Regular angular spacing, identical spokes in every frame.
    RegNoRot,
    /// Regular spacing with a per-frame rotation so `acceleration`
    /// consecutive frames tile a fully sampled set.
    RegRot,
    /// Tiny golden angle increments, identical spokes in every frame.
    TgaNoRot,
    /// Continuously rotating tiny golden angle (global spoke counter).
    TgaRot,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::RegNoRot, Pattern::RegRot, Pattern::TgaNoRot, Pattern::TgaRot];

    pub fn label(self) -> &'static str {
        match self {
            Pattern::RegNoRot => "REG_NO_ROT",
            Pattern::RegRot => "REG_ROT",
            Pattern::TgaNoRot => "TGA_NO_ROT",
            Pattern::TgaRot => "TGA_ROT",
        }
    }

    /// Rotating patterns vary the spoke set from frame to frame.
    pub fn rotates(self) -> bool {
        matches!(self, Pattern::RegRot | Pattern::TgaRot)
    }
}

/// Fully determines every spoke angle of an acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub pattern: Pattern,
    /// Spokes acquired per frame.
    pub spokes_per_frame: usize,
    /// Spokes required for a fully sampled set (Nyquist).
    pub full_spokes: usize,
    /// Samples per spoke.
    pub readout_len: usize,
    /// Tiny-golden-angle order N.
    pub tga_index: u32,
    /// Added to every angle; the paper leaves the start angle of the regular
    /// schemes unstated, so 0 is the default and the offset is configurable.
    #[serde(default)]
    pub phase_offset_deg: f64,
}

impl TrajectorySpec {
    pub fn new(pattern: Pattern, readout_len: usize) -> Self {
        Self {
            pattern,
            spokes_per_frame: 14,
            full_spokes: 182,
            readout_len,
            tga_index: 7,
            phase_offset_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spokes_per_frame < 1 {
            return Err(Error::Config("spokes_per_frame must be >= 1".into()));
        }
        if self.full_spokes < self.spokes_per_frame {
            return Err(Error::Config("full_spokes must be >= spokes_per_frame".into()));
        }
        if self.readout_len < 2 {
            return Err(Error::Config("readout_len must be >= 2".into()));
        }
        if self.tga_index < 1 {
            return Err(Error::Config("tga_index must be >= 1".into()));
        }
        Ok(())
    }

    /// Undersampling factor relative to the fully sampled spoke count
    /// (13.0 for the 182/14 defaults).
    pub fn acceleration(&self) -> f64 {
        self.full_spokes as f64 / self.spokes_per_frame as f64
    }

    /// Spoke angles in degrees, reduced mod 180, for one frame.
    pub fn spoke_angles(&self, frame_index: usize) -> Vec<f64> {
        let n = self.spokes_per_frame;
        let f = frame_index as f64;
        let mut angles = Vec::with_capacity(n);
        match self.pattern {
            Pattern::RegNoRot => {
                let step = 180.0 / n as f64;
                for k in 0..n {
                    angles.push(wrap180(k as f64 * step + self.phase_offset_deg));
                }
            }
            Pattern::RegRot => {
                // Per-frame rotation 180/full_spokes, i.e. 180/(n * acceleration).
                let step = 180.0 / n as f64;
                let rot = 180.0 / self.full_spokes as f64;
                for k in 0..n {
                    angles.push(wrap180(k as f64 * step + f * rot + self.phase_offset_deg));
                }
            }
            Pattern::TgaNoRot => {
                let psi = tiny_golden_angle(self.tga_index).expect("validated order");
                for k in 0..n {
                    angles.push(wrap180(k as f64 * psi + self.phase_offset_deg));
                }
            }
            Pattern::TgaRot => {
                let psi = tiny_golden_angle(self.tga_index).expect("validated order");
                for k in 0..n {
                    // Exact integer global spoke counter, single multiply.
                    let g = (frame_index * n + k) as f64;
                    angles.push(wrap180(g * psi + self.phase_offset_deg));
                }
            }
        }
        angles
    }

    /// Angles plus normalized k-space coordinates for one frame.
    pub fn spoke_coordinates(&self, frame_index: usize) -> SpokeSet {
        SpokeSet::new(self.spoke_angles(frame_index), self.readout_len)
    }
}

/// Tiny golden angle of order N in degrees: 180 / (tau + N - 1) with
/// tau the golden ratio. N = 1 is the classic golden angle (~111.25 deg),
/// N = 7 the ~23.63 deg increment used for real-time imaging.
pub fn tiny_golden_angle(order: u32) -> Result<f64> {
    if order < 1 {
        return Err(Error::Config("tiny golden angle order must be >= 1".into()));
    }
    let tau = (1.0 + 5.0f64.sqrt()) / 2.0;
    Ok(180.0 / (tau + order as f64 - 1.0))
}

fn wrap180(deg: f64) -> f64 {
    let w = deg.rem_euclid(180.0);
    // rem_euclid can return exactly 180.0 when deg is a tiny negative number.
    if w >= 180.0 {
        0.0
    } else {
        w
    }
}

/// Spoke angles of one frame plus the normalized sample coordinates.
///
/// Coordinates live in cycles/pixel: sample m on a spoke at angle theta sits
/// at radius `r = -0.5 + m / (readout_len - 1)` so the spoke spans the full
/// k-space diameter, and `(kx, ky) = r (cos theta, sin theta)`. Layout is
/// spoke-major: sample index `s * readout_len + m`.
#[derive(Debug, Clone)]
pub struct SpokeSet {
    pub angles_deg: Vec<f64>,
    pub readout_len: usize,
    pub kx: Vec<f32>,
    pub ky: Vec<f32>,
    /// Signed radius of each readout sample, shared by every spoke.
    pub radius: Vec<f32>,
}

impl SpokeSet {
    pub fn new(angles_deg: Vec<f64>, readout_len: usize) -> Self {
        assert!(readout_len >= 2, "readout_len must be >= 2");
        let radius: Vec<f32> = (0..readout_len)
            .map(|m| (-0.5 + m as f64 / (readout_len - 1) as f64) as f32)
            .collect();
        let mut kx = Vec::with_capacity(angles_deg.len() * readout_len);
        let mut ky = Vec::with_capacity(angles_deg.len() * readout_len);
        for &a in &angles_deg {
            let (sin, cos) = a.to_radians().sin_cos();
            for &r in &radius {
                kx.push((r as f64 * cos) as f32);
                ky.push((r as f64 * sin) as f32);
            }
        }
        Self { angles_deg, readout_len, kx, ky, radius }
    }

    pub fn n_spokes(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn n_samples(&self) -> usize {
        self.kx.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn defaults(pattern: Pattern) -> TrajectorySpec {
        TrajectorySpec::new(pattern, 192)
    }

    #[test]
    fn tiny_golden_angle_values() {
        // Order 7 is the real-time increment; orders 1 and 2 follow from the
        // closed form 180 / (tau + N - 1).
        assert_abs_diff_eq!(tiny_golden_angle(7).unwrap(), 23.628, epsilon = 5e-4);
        assert_abs_diff_eq!(tiny_golden_angle(1).unwrap(), 111.246, epsilon = 5e-4);
        assert_abs_diff_eq!(tiny_golden_angle(2).unwrap(), 68.754, epsilon = 5e-4);
        assert!(tiny_golden_angle(0).is_err());
    }

    #[test]
    fn reg_no_rot_angles() {
        let spec = defaults(Pattern::RegNoRot);
        let a = spec.spoke_angles(0);
        let step = 180.0 / 14.0;
        for (k, &ang) in a.iter().enumerate() {
            assert_abs_diff_eq!(ang, k as f64 * step, epsilon = 1e-12);
        }
        assert_eq!(a, spec.spoke_angles(17));
    }

    #[test]
    fn reg_rot_frame_step() {
        let spec = defaults(Pattern::RegRot);
        let f1 = spec.spoke_angles(1);
        assert_abs_diff_eq!(f1[0], 180.0 / 182.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f1[0], 0.989, epsilon = 5e-4);
    }

    #[test]
    fn tga_rot_matches_global_counter() {
        let spec = defaults(Pattern::TgaRot);
        let psi = tiny_golden_angle(7).unwrap();
        assert_eq!(spec.spoke_angles(0), defaults(Pattern::TgaNoRot).spoke_angles(0));
        let f1 = spec.spoke_angles(1);
        assert_abs_diff_eq!(f1[0], (14.0 * psi).rem_euclid(180.0), epsilon = 1e-12);
        assert_abs_diff_eq!(f1[0], 150.79, epsilon = 5e-3);
    }

    #[test]
    fn reg_rot_frames_tile_full_set() {
        // Union of the first 13 frames is 182 uniformly spaced angles.
        let spec = defaults(Pattern::RegRot);
        let mut all: Vec<f64> = (0..13).flat_map(|f| spec.spoke_angles(f)).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all.len(), 182);
        let gap = 180.0 / 182.0;
        for w in all.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], gap, epsilon = 1e-9);
        }
    }

    #[test]
    fn rotating_patterns_have_disjoint_consecutive_frames() {
        for pattern in [Pattern::RegRot, Pattern::TgaRot] {
            let spec = defaults(pattern);
            let window = spec.full_spokes / spec.spokes_per_frame;
            let mut seen: Vec<f64> = Vec::new();
            for f in 0..window {
                for a in spec.spoke_angles(f) {
                    for &s in &seen {
                        assert!((a - s).abs() > 1e-9, "{:?} repeats angle {} at frame {}", pattern, a, f);
                    }
                    seen.push(a);
                }
            }
        }
    }

    #[test]
    fn non_rotating_patterns_static() {
        for pattern in [Pattern::RegNoRot, Pattern::TgaNoRot] {
            let spec = defaults(pattern);
            let f0 = spec.spoke_angles(0);
            for f in 1..20 {
                assert_eq!(f0, spec.spoke_angles(f));
            }
        }
    }

    #[test]
    fn axis_aligned_spoke_coordinates() {
        let set = SpokeSet::new(vec![0.0], 3);
        assert_eq!(set.n_samples(), 3);
        assert_abs_diff_eq!(set.kx[0] as f64, -0.5, epsilon = 1e-7);
        assert_abs_diff_eq!(set.kx[1] as f64, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(set.kx[2] as f64, 0.5, epsilon = 1e-7);
        assert!(set.ky.iter().all(|&v| v.abs() < 1e-7));
        // all spokes pass through DC
        let vertical = SpokeSet::new(vec![90.0], 3);
        assert_abs_diff_eq!(vertical.kx[1] as f64, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(vertical.ky[1] as f64, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn default_frame_sample_count() {
        let set = defaults(Pattern::TgaRot).spoke_coordinates(0);
        assert_eq!(set.n_samples(), 14 * 192);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = defaults(Pattern::TgaRot);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("TGA_ROT"));
        let back: TrajectorySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    proptest! {
        #[test]
        fn angles_wrapped_and_coords_bounded(
            pattern_idx in 0usize..4,
            spokes in 1usize..24,
            frame in 0usize..200,
            readout in 2usize..64,
            offset in -400.0f64..400.0,
        ) {
            let spec = TrajectorySpec {
                pattern: Pattern::ALL[pattern_idx],
                spokes_per_frame: spokes,
                full_spokes: spokes * 13,
                readout_len: readout,
                tga_index: 7,
                phase_offset_deg: offset,
            };
            let set = spec.spoke_coordinates(frame);
            for &a in &set.angles_deg {
                prop_assert!((0.0..180.0).contains(&a));
            }
            for (&x, &y) in set.kx.iter().zip(&set.ky) {
                let r = ((x as f64).powi(2) + (y as f64).powi(2)).sqrt();
                prop_assert!(r <= 0.5 + 1e-6);
            }
        }
    }
}
