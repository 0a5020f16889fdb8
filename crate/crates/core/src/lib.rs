//! Simulation and analysis toolkit for a thin diamond membrane inside an open
//! Fabry-Pérot microcavity.
//!
//! The crate is organised bottom-up:
//!
//! * [`stack`] – layer geometry, Bragg mirrors, the assembled cavity and the
//!   emitter description.
//! * [`tmm`] – normal-incidence transfer-matrix solver: spectra, resonance
//!   search, intracavity field profiles.
//! * [`dispersion`] – resonance tracking versus air-gap length.
//! * [`modes`] – transverse Gaussian-mode quantities and vacuum-field
//!   normalisation.
//! * [`cqed`] – emitter/cavity figure-of-merit algebra.
//! * [`fit`] – least-squares fitting of resonance, lifetime and
//!   autocorrelation data.
//! * [`design`] – forward evaluation and sweeps of candidate cavity designs.
//! * [`config`], [`report`], [`csvio`] – the file formats used by the
//!   `cavityforge` binary.

pub mod config;
pub mod constants;
pub mod cqed;
pub mod csvio;
pub mod design;
pub mod dispersion;
pub mod error;
pub mod fit;
pub mod modes;
pub mod report;
pub mod stack;
pub mod synth;
pub mod tmm;

pub use error::{Error, Result};
