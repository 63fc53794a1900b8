//! Antenna diversity analysis for multi-port networks and far-field patterns.
//!
//! The crate has five areas:
//!
//! - [`touchstone`]: Touchstone v1 `.sNp` parsing, writing, resampling and
//!   passivity screening ([`touchstone::NetworkData`]).
//! - [`farfield`]: far-field pattern ingestion (`.ffp` CSV), spherical
//!   quadrature, radiated power, directivity and peak gain.
//! - [`metrics`]: diversity figures of merit such as envelope correlation
//!   (from patterns or S-parameters), TARC, channel capacity loss, mean
//!   effective gain, and rejected-band detection.
//! - [`design`]: quarter-wave stub and U-slot notch calculators plus an
//!   empirical gap-to-bandwidth model.
//! - [`synth`]: analytic dipole patterns and synthetic notched networks used
//!   as oracles and demo inputs.

pub mod design;
pub mod error;
pub mod farfield;
pub mod metrics;
pub mod synth;
pub mod touchstone;

pub use error::Error;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
