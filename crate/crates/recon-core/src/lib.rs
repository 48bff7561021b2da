//! Reconstruction laboratory for radially undersampled dynamic (2D+time) MRI.
//!
//! The crate covers the full path from synthetic cardiac cine generation to
//! quantitative evaluation:
//!
//! * [`tensor`] / [`io`] / [`rng`] — dense real/complex tensors, the `RCT1`
//!   on-disk format and deterministic seeded random streams
//! * [`trajectory`] — spoke angle tables for the four radial sampling patterns
//! * [`kspace`] — centered FFTs, Kaiser-Bessel degridding/regridding and the
//!   cine corruption pipeline
//! * [`datagen`] — cardiac-like phantoms and paired (truth, aliased) datasets
//! * [`unet`] — a from-scratch 3D residual U-Net with reverse-mode gradients,
//!   ADAM and the training loop
//! * [`grasp`] — temporal-total-variation compressed sensing via ADMM
//! * [`metrics`] — RMSE, SSIM, edge sharpness, Bland-Altman, flicker, timing
//!
//! All heavy inner loops go through [`parallel`], which uses rayon when the
//! `parallel` feature (default) is enabled and falls back to sequential
//! iteration otherwise. Results are identical either way.

pub mod datagen;
pub mod grasp;
pub mod io;
pub mod kspace;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod tensor;
pub mod trajectory;
pub mod unet;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("missing artifact: {0}")]
    Missing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
