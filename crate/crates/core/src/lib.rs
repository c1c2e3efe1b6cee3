//! Linear operations on discrete spatial modes of light realized with
//! phase-only gratings on two spatial light modulators.
//!
//! The crate covers the whole chain: Gaussian mode layouts ([`modes`]),
//! splitter/combiner grating synthesis ([`synthesis`]), a scalar-diffraction
//! model of the optical train ([`optsim`]), phase calibration ([`calib`]),
//! the operator library used in the experiments ([`qops`]) and state
//! tomography with a photon-counting noise model ([`tomo`]).

pub mod calib;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fft2;
pub mod io;
pub mod linalg;
pub mod modes;
pub mod optsim;
pub mod qops;
pub mod synthesis;
pub mod tomo;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
