//! Unit helpers. Internally every rate is an angular frequency in rad/μs.

use core::f64::consts::{PI, TAU};

/// Ordinary frequency in Hz to angular frequency in rad/μs.
pub fn hz(f: f64) -> f64 {
    TAU * f * 1e-6
}

/// Ordinary frequency in kHz to angular frequency in rad/μs.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Ordinary frequency in MHz to angular frequency in rad/μs.
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/μs back to ordinary frequency in Hz.
pub fn to_hz(w: f64) -> f64 {
    w / TAU * 1e6
}

/// Angular frequency in rad/μs back to ordinary frequency in kHz.
pub fn to_khz(w: f64) -> f64 {
    w / TAU * 1e3
}

/// Ground-coherence decay rate used for the phenomenological model,
/// γ₂ = π × 78 kHz.
pub const GAMMA2_DEFAULT: f64 = PI * 78e3 * 1e-6;

/// Phenomenological excited-state decay rate absorbing Doppler broadening,
/// Γ = 2π × 500 MHz.
pub const GAMMA_PHENOMENOLOGICAL: f64 = TAU * 500.0;

/// Natural excited-state decay rate used with explicit velocity averaging,
/// Γ = 2π × 5.6 MHz.
pub const GAMMA_NATURAL: f64 = TAU * 5.6;
