//! Unit conventions shared by the whole crate.
//!
//! Everything is expressed in the same internal system:
//!
//! - angular frequencies and energies in rad/us (hbar = 1),
//! - times in us,
//! - distances in um.
//!
//! A Rabi frequency quoted as "2pi x 10 MHz" is `2pi * 10 rad/us` here,
//! because 1 MHz = 1 cycle/us. Decay rates tabulated in kHz convert with
//! [`kilohertz_to_rad_per_us`]. The laser-noise spectral model is the one
//! exception: it works in SI hertz internally (see [`crate::noise`]) and
//! only its time traces (rad) cross into gate propagations.

use std::f64::consts::PI;

/// Peak Rabi frequency used throughout: 2pi x 10 MHz in rad/us.
pub const OMEGA_MAX: f64 = 2.0 * PI * 10.0;

/// One Rabi period 2pi/OMEGA_MAX in us; gate durations are usually quoted
/// in multiples of this.
pub const RABI_PERIOD: f64 = 2.0 * PI / OMEGA_MAX;

/// Planck constant in J*s (SI, exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Speed of light in m/s (SI, exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert an ordinary (cycles) frequency in kHz to an angular rate in rad/us.
pub fn kilohertz_to_rad_per_us(f_khz: f64) -> f64 {
    2.0 * PI * 1.0e-3 * f_khz
}

/// Convert an angular rate in rad/us back to kHz.
pub fn rad_per_us_to_kilohertz(w: f64) -> f64 {
    w / (2.0 * PI * 1.0e-3)
}
