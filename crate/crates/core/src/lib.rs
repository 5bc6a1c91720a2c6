//! Non-stationary 3D geometry-based stochastic channel model for MIMO links
//! assisted by an intelligent reflecting surface (IRS).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: array layouts, IRS index mapping, LCS/GCS rotation.
//! * [`irs`]: reflection phase plans, quantisation, received power, steering.
//! * [`largescale`]: shadow fading and path loss.
//! * [`clusters`]: twin clusters, scatterer placement and birth-death visibility.
//! * [`smallscale`]: ray delays, LoS/NLoS impulse responses, transfer functions.
//! * [`scenario`]: resolved scenario and per-trial channel realizations.
//! * [`assembly`]: cascading the three sub-channels with the IRS phase plan.
//! * [`stats`]: time ACF, spatial CCF, delay spread and Doppler spread.
//! * [`config`], [`experiment`], [`rng`]: configuration, orchestration, seeding.

pub mod assembly;
pub mod clusters;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod irs;
pub mod largescale;
pub mod output;
pub mod rng;
pub mod scenario;
pub mod smallscale;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use num_complex::Complex64;
