//! Physical constants and unit conventions.
//!
//! Configuration files take linear frequencies in Hz (values quoted as
//! "ν/2π"); everything internal is angular frequency in rad/s. The
//! conversion happens exactly once, at parameter construction.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Reduced Planck constant (J·s), 2018 CODATA.
pub const HBAR: f64 = 1.054571817e-34;

/// Boltzmann constant (J/K), exact SI.
pub const KB: f64 = 1.380649e-23;

/// Atomic mass unit (kg).
pub const AMU: f64 = 1.66053906660e-27;

/// Mass of ⁸⁸Sr (kg).
pub const SR88_MASS: f64 = 87.9056121 * AMU;

/// Linear frequency in Hz → angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TWO_PI * f
}

/// Angular frequency in rad/s → linear frequency in Hz.
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TWO_PI
}
