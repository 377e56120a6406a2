//! Emission-current modelling for lateral vacuum microdiodes.
//!
//! * [`physics`]: thermionic and Fowler-Nordheim current densities.
//! * [`device`]: parallel-emitter arrays, sweeps, turn-on and breakdown.
//! * [`environment`]: surface conditioning, emission noise and gas
//!   scattering, including pressure inversion for vacuum monitoring.
//! * [`extraction`]: F-N plots and `(C, B)` fitting.
//! * [`config`], [`csv_io`], [`report`]: file formats used by the CLI.

pub mod config;
pub mod constants;
pub mod csv_io;
pub mod device;
pub mod environment;
pub mod error;
pub mod extraction;
mod numeric;
pub mod physics;
pub mod report;

pub use device::{DeviceGeometry, IVCurve, Sample, ScreeningModel};
pub use environment::EnvironmentState;
pub use error::{Error, Result};
pub use extraction::{FNPlotPoint, FitResult};
pub use physics::{FNCoefficients, Material};
