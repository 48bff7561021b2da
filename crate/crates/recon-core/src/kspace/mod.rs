//! Fourier operators between Cartesian image space and radial k-space.
//!
//! `corrupt_cine` is the training-data corruption pipeline: per frame, the
//! image is degridded onto the undersampled radial trajectory and regridded
//! back with density compensation, producing the aliased magnitude image and
//! keeping the raw radial data for the compressed-sensing solver.

mod coils;
mod fft;
mod gridding;

pub use coils::{coil_maps, combine_coils_rss, estimate_coil_maps, simulate_coils};
pub use fft::{fft2_centered, ifft2_centered};
pub use gridding::{
    bessel_i0, compensated_weights, density_weights, refine_density_weights, GridGeometry,
    GriddingKernel, KernelKind,
};

use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::parallel;
use crate::tensor::{Cine, ComplexFrame};
use crate::trajectory::{SpokeSet, TrajectorySpec};
use crate::{Error, Result};

/// Radial samples of one frame: coils x spokes x readout, plus the spoke set.
#[derive(Debug, Clone)]
pub struct RadialFrame {
    pub samples: Vec<Complex32>,
    pub spoke_set: SpokeSet,
    pub ncoils: usize,
}

impl RadialFrame {
    pub fn coil(&self, c: usize) -> &[Complex32] {
        let n = self.spoke_set.n_samples();
        &self.samples[c * n..(c + 1) * n]
    }
}

/// Full radial acquisition of a cine.
#[derive(Debug, Clone)]
pub struct RadialKSpace {
    pub frames: Vec<RadialFrame>,
    pub ncoils: usize,
    pub spec: TrajectorySpec,
}

/// Sidecar metadata stored next to a serialized radial stack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSidecar {
    pub spec: TrajectorySpec,
    pub ncoils: usize,
    pub n_frames: usize,
}

impl RadialKSpace {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Save as an RCT1 complex tensor (frames x coils x spokes x readout)
    /// plus a JSON sidecar carrying the trajectory.
    pub fn save(&self, tensor_path: &std::path::Path, sidecar_path: &std::path::Path) -> Result<()> {
        let spokes = self.spec.spokes_per_frame;
        let readout = self.spec.readout_len;
        let mut data = Vec::with_capacity(self.frames.len() * self.ncoils * spokes * readout);
        for frame in &self.frames {
            data.extend_from_slice(&frame.samples);
        }
        crate::io::save_tensor(
            tensor_path,
            &crate::io::Tensor::Complex {
                dims: vec![self.frames.len(), self.ncoils, spokes, readout],
                data,
            },
        )?;
        let sidecar = RadialSidecar {
            spec: self.spec.clone(),
            ncoils: self.ncoils,
            n_frames: self.frames.len(),
        };
        std::fs::write(sidecar_path, serde_json::to_vec_pretty(&sidecar).map_err(io_err)?)?;
        Ok(())
    }

    pub fn load(tensor_path: &std::path::Path, sidecar_path: &std::path::Path) -> Result<Self> {
        let sidecar: RadialSidecar =
            serde_json::from_slice(&std::fs::read(sidecar_path)?).map_err(io_err)?;
        let tensor = crate::io::load_tensor(tensor_path)?;
        let (dims, data) = match tensor {
            crate::io::Tensor::Complex { dims, data } => (dims, data),
            _ => return Err(Error::Format("radial stack must be complex".into())),
        };
        if dims.len() != 4
            || dims[0] != sidecar.n_frames
            || dims[1] != sidecar.ncoils
            || dims[2] != sidecar.spec.spokes_per_frame
            || dims[3] != sidecar.spec.readout_len
        {
            return Err(Error::Format(format!("radial dims {:?} do not match sidecar", dims)));
        }
        let per_frame = dims[1] * dims[2] * dims[3];
        let frames = (0..dims[0])
            .map(|f| RadialFrame {
                samples: data[f * per_frame..(f + 1) * per_frame].to_vec(),
                spoke_set: sidecar.spec.spoke_coordinates(f),
                ncoils: sidecar.ncoils,
            })
            .collect();
        Ok(Self { frames, ncoils: sidecar.ncoils, spec: sidecar.spec })
    }
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

/// Resample a Cartesian k-space frame onto radial spokes. Equivalent to
/// running the image-domain forward operator on `ifft2_centered(kspace)`.
pub fn degrid(geom: &GridGeometry, kspace: &ComplexFrame, spokes: &SpokeSet) -> Result<Vec<Complex32>> {
    geom.forward(&ifft2_centered(kspace), spokes)
}

/// Adjoint regridding of radial samples back to an image frame; with
/// `density_comp` the samples are ramp-weighted first. Returns the complex
/// frame and its magnitude.
pub fn regrid_adjoint(
    geom: &GridGeometry,
    samples: &[Complex32],
    spokes: &SpokeSet,
    density_comp: bool,
) -> Result<(ComplexFrame, Vec<f32>)> {
    let frame = if density_comp {
        let weights = compensated_weights(geom, spokes);
        let weighted: Vec<Complex32> =
            samples.iter().zip(&weights).map(|(s, &w)| s * w).collect();
        geom.adjoint(&weighted, spokes)?
    } else {
        geom.adjoint(samples, spokes)?
    };
    let mag = frame.magnitude();
    Ok((frame, mag))
}

/// Corrupt a cine through the radial undersampling pipeline.
///
/// Per frame: (optional coil weighting) -> degrid onto that frame's spokes ->
/// density-compensated adjoint regrid -> coil RSS -> magnitude. Frames are
/// processed concurrently; results are identical to sequential execution.
pub fn corrupt_cine(
    cine: &Cine,
    spec: &TrajectorySpec,
    ncoils: usize,
) -> Result<(Cine, RadialKSpace)> {
    spec.validate()?;
    let (t, h, w) = cine.shape();
    let geom = GridGeometry::new(h, w, GriddingKernel::default());
    let maps = coil_maps(h, w, ncoils)?;
    let results: Vec<Result<(Vec<f32>, RadialFrame)>> = parallel::map_indexed(t, |f| {
        let spokes = spec.spoke_coordinates(f);
        let image = ComplexFrame::from_real(h, w, cine.frame(f))?;
        let coil_images = simulate_coils(&image, &maps);
        let weights = compensated_weights(&geom, &spokes);
        let mut samples = Vec::with_capacity(ncoils * spokes.n_samples());
        let mut adjoints = Vec::with_capacity(ncoils);
        for ci in &coil_images {
            let s = geom.forward(ci, &spokes)?;
            let weighted: Vec<Complex32> = s.iter().zip(&weights).map(|(v, &dw)| v * dw).collect();
            adjoints.push(geom.adjoint(&weighted, &spokes)?);
            samples.extend_from_slice(&s);
        }
        let magnitude = combine_coils_rss(&adjoints);
        Ok((magnitude, RadialFrame { samples, spoke_set: spokes, ncoils }))
    });
    let mut aliased = Cine::zeros(t, h, w, cine.frame_dt_ms);
    let mut frames = Vec::with_capacity(t);
    for (f, res) in results.into_iter().enumerate() {
        let (mag, frame) = res?;
        aliased.frame_mut(f).copy_from_slice(&mag);
        frames.push(frame);
    }
    Ok((aliased, RadialKSpace { frames, ncoils, spec: spec.clone() }))
}
