//! Unit bookkeeping.
//!
//! Public quantities are linear frequencies in GHz (energy / h), times in ns
//! and temperatures in mK. Kernels that need angular frequencies convert at
//! the boundary with [`angular`]; nothing else in the crate multiplies by 2π
//! on its own.

use std::f64::consts::PI;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;
/// k_B/h in GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = BOLTZMANN / PLANCK * 1e-9;

pub const TWO_PI: f64 = 2.0 * PI;

/// Linear frequency (GHz) to angular frequency (rad/ns).
#[inline]
pub fn angular(nu_ghz: f64) -> f64 {
    TWO_PI * nu_ghz
}

/// Angular frequency (rad/ns) to linear frequency (GHz).
#[inline]
pub fn linear(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Thermal energy k_B T / h in GHz for a temperature in mK.
#[inline]
pub fn thermal_ghz(temp_mk: f64) -> f64 {
    temp_mk * 1e-3 * KB_OVER_H_GHZ_PER_K
}

/// Inverse of [`thermal_ghz`].
#[inline]
pub fn temp_mk_from_ghz(kt_ghz: f64) -> f64 {
    kt_ghz / KB_OVER_H_GHZ_PER_K * 1e3
}

/// Thermal time ħ/(k_B T) in ns.
#[inline]
pub fn thermal_time_ns(temp_mk: f64) -> f64 {
    1.0 / angular(thermal_ghz(temp_mk))
}

/// Energy in joules to GHz.
#[inline]
pub fn joules_to_ghz(e: f64) -> f64 {
    e / PLANCK * 1e-9
}

/// GHz to joules.
#[inline]
pub fn ghz_to_joules(nu: f64) -> f64 {
    nu * 1e9 * PLANCK
}

/// Boltzmann weight e^{-hν/k_BT}.
#[inline]
pub fn boltzmann_factor(nu_ghz: f64, temp_mk: f64) -> f64 {
    (-nu_ghz / thermal_ghz(temp_mk)).exp()
}
