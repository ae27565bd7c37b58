//! Hybrid bath: Ohmic high-frequency noise plus a low-frequency Gaussian
//! (macroscopic resonant tunneling) component, both scaled along the anneal
//! by B(s)/B(1).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{integrate, GkOptions};
use crate::schedule::AnnealSchedule;
use crate::special::{coth_stable, inv_sinh_sq_stable, ln_abs_gamma, ln_gamma, ln_sinh_lower_strip};
use crate::units::{angular, thermal_ghz, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Ohmic coupling at s = 1.
    pub eta_mrt: f64,
    /// Low-frequency line width W/2π at s = 1, GHz.
    pub w_mrt: f64,
    pub temp_mk: f64,
    /// Ohmic cutoff ν_c, GHz.
    pub omega_c: f64,
    /// Anneal time, ns.
    pub t_qa: f64,
    /// Drop the reorganization shift when |Δ*| exceeds this many GHz.
    #[serde(default)]
    pub eps_p_suppression: Option<f64>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::main_chip(15.5)
    }
}

impl NoiseModel {
    /// η = 0.24, W/2π = 0.4 GHz.
    pub fn main_chip(temp_mk: f64) -> Self {
        Self {
            eta_mrt: 0.24,
            w_mrt: 0.4,
            temp_mk,
            omega_c: 100.0,
            t_qa: 20_000.0,
            eps_p_suppression: None,
        }
    }

    /// The earlier chip: η = 0.06, W/2π = 0.22 GHz.
    pub fn earlier_chip(temp_mk: f64) -> Self {
        Self {
            eta_mrt: 0.06,
            w_mrt: 0.22,
            ..Self::main_chip(temp_mk)
        }
    }

    pub fn preset(name: &str, temp_mk: f64) -> Result<Self> {
        match name {
            "main" => Ok(Self::main_chip(temp_mk)),
            "earlier_chip" => Ok(Self::earlier_chip(temp_mk)),
            other => Err(invalid(format!("unknown noise preset {other:?}"))),
        }
    }

    pub fn with_temp(self, temp_mk: f64) -> Self {
        Self { temp_mk, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("w_mrt", self.w_mrt),
            ("temp_mk", self.temp_mk),
            ("omega_c", self.omega_c),
            ("t_qa", self.t_qa),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta_mrt >= 0.0 && self.eta_mrt.is_finite()) {
            return Err(invalid("eta_mrt must be non-negative"));
        }
        if self.omega_c <= 20.0 * self.kt_ghz() {
            return Err(invalid(format!(
                "cutoff {} GHz must exceed 20 k_BT/h = {} GHz",
                self.omega_c,
                20.0 * self.kt_ghz()
            )));
        }
        Ok(())
    }

    pub fn kt_ghz(&self) -> f64 {
        thermal_ghz(self.temp_mk)
    }

    /// Parameters at a point where B(s)/B(1) = `b_ratio`.
    pub fn at_ratio(&self, s: f64, b_ratio: f64) -> NoiseAt {
        let eta = self.eta_mrt * b_ratio;
        let w = self.w_mrt * b_ratio.sqrt();
        let kt = self.kt_ghz();
        // ε_p = ħW²/(2k_BT) with W angular; as a linear frequency this is w²/(2 kT/h)·2π/2π.
        let eps_p = angular(w).powi(2) / (2.0 * angular(kt)) / TWO_PI;
        NoiseAt {
            s,
            eta,
            w,
            eps_p,
            beta_time: 1.0 / angular(kt),
        }
    }
}

/// Noise parameters at one anneal fraction. Frequencies are GHz, times ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAt {
    pub s: f64,
    pub eta: f64,
    pub w: f64,
    pub eps_p: f64,
    /// ħ/(k_BT), ns.
    pub beta_time: f64,
}

impl NoiseAt {
    pub fn w_ang(&self) -> f64 {
        angular(self.w)
    }

    pub fn eps_ang(&self) -> f64 {
        angular(self.eps_p)
    }

    pub fn kt_ang(&self) -> f64 {
        1.0 / self.beta_time
    }

    /// Apply the coherent-regime toggle: zero ε_p when |Δ*| is above the
    /// model threshold.
    pub fn suppressed_for(&self, model: &NoiseModel, delta_star_ghz: f64) -> NoiseAt {
        match model.eps_p_suppression {
            Some(th) if delta_star_ghz.abs() > th => NoiseAt { eps_p: 0.0, ..*self },
            _ => *self,
        }
    }
}

pub fn noise_at(model: &NoiseModel, schedule: &AnnealSchedule, s: f64) -> NoiseAt {
    model.at_ratio(s, schedule.b_ratio(s))
}

/// Ohmic spectral density S(ω)/ħ² in rad/ns at linear frequency `nu`.
///
/// `η ω e^{−|ω|/ω_c} / (1 − e^{−βω})` with the s-scaled η of `at`.
pub fn spectral_density(at: &NoiseAt, model: &NoiseModel, nu: f64) -> f64 {
    ohmic(at.eta, angular(model.omega_c), at.beta_time, angular(nu))
}

fn ohmic(eta: f64, omega_c: f64, beta: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return eta / beta;
    }
    let bose = omega / -(-beta * omega).exp_m1();
    eta * bose * (-omega.abs() / omega_c).exp()
}

/// Bath exponent f(τ) with the exact Gamma-function Ohmic part.
///
/// `f = i ε_p τ + ½ W² τ² − (η/2π) ln G(τ)`, angular units internally.
pub fn f_kernel(tau: f64, at: &NoiseAt, model: &NoiseModel) -> Complex64 {
    let i = Complex64::i();
    let gauss = i * at.eps_ang() * tau + 0.5 * at.w_ang().powi(2) * tau * tau;
    if at.eta == 0.0 {
        return gauss;
    }
    gauss - at.eta / TWO_PI * ln_g(tau, angular(model.omega_c), at.beta_time)
}

/// ln G(τ) on its continuous branch along real τ.
pub fn ln_g(tau: f64, omega_c: f64, beta: f64) -> Complex64 {
    let wt = omega_c * tau;
    let bw = beta * omega_c;
    let z = Complex64::new(1.0, -wt) / bw;
    // Γ(z)Γ(z̄) = |Γ(z)|², so only the modulus enters.
    let re = 0.5 * wt.mul_add(wt, 1.0).ln() + 2.0 * ln_abs_gamma(z) - 2.0 * ln_gamma(1.0 / bw);
    Complex64::new(re, -wt.atan())
}

/// The βω_c ≫ 1 form of the Ohmic factor:
/// `K(τ) = (iβ/πτ_c) sinh(π(τ − iτ_c)/β)`, with G ≈ 1/K.
#[derive(Debug, Clone, Copy)]
pub struct SinhKernel {
    pub beta: f64,
    pub tau_c: f64,
}

impl SinhKernel {
    pub fn new(at: &NoiseAt, model: &NoiseModel) -> Self {
        Self {
            beta: at.beta_time,
            tau_c: 1.0 / angular(model.omega_c),
        }
    }

    fn arg(&self, tau: f64) -> Complex64 {
        Complex64::new(tau, -self.tau_c) * (PI / self.beta)
    }

    /// ln K(τ), phase in (−π/2, π/2).
    pub fn ln_k(&self, tau: f64) -> Complex64 {
        let prefactor = Complex64::new((self.beta / (PI * self.tau_c)).ln(), 0.5 * PI);
        prefactor + ln_sinh_lower_strip(self.arg(tau))
    }

    /// d ln K / dτ
    pub fn d_ln_k(&self, tau: f64) -> Complex64 {
        (PI / self.beta) * coth_stable(self.arg(tau))
    }

    /// d² ln K / dτ²
    pub fn d2_ln_k(&self, tau: f64) -> Complex64 {
        -(PI / self.beta).powi(2) * inv_sinh_sq_stable(self.arg(tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambShift {
    pub numeric: f64,
    pub approx: f64,
}

/// Ohmic Lamb shift at linear frequency `nu` (GHz), using the s = 1
/// coupling `eta_mrt`, integrated over [−κ k_BT/ħ, κ ω_c].
pub fn lamb_shift(model: &NoiseModel, nu: f64, kappa: f64) -> Result<LambShift> {
    if kappa < 2.0 {
        return Err(invalid(format!("kappa must be ≥ 2, got {kappa}")));
    }
    let eta = model.eta_mrt;
    let wc = angular(model.omega_c);
    let kt = angular(model.kt_ghz());
    let beta = 1.0 / kt;
    let w = angular(nu);
    let approx = -(eta / TWO_PI) * (wc + w * (wc / kt).ln()) / TWO_PI;
    if eta == 0.0 {
        return Ok(LambShift { numeric: 0.0, approx });
    }
    let (lo, hi) = (-kappa * kt, kappa * wc);
    if !(w > lo && w < hi) {
        return Err(invalid("frequency outside the integration window"));
    }
    let gamma = |x: f64| ohmic(eta, wc, beta, x);
    let g0 = gamma(w);
    let mut bps = vec![lo, w, hi];
    for extra in [0.0, kt, 10.0 * kt, 0.1 * wc, wc, 3.0 * wc, 10.0 * wc] {
        if extra > lo && extra < hi && (extra - w).abs() > 1e-9 * wc {
            bps.push(extra);
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let opts = GkOptions {
        abs_tol: 1e-12 * eta * wc,
        rel_tol: 1e-9,
        ..GkOptions::default()
    };
    let regular = integrate(|x| (gamma(x) - g0) / (w - x), &bps, &opts).value;
    let log_term = g0 * ((w - lo) / (hi - w)).ln();
    let numeric = (regular + log_term) / TWO_PI / TWO_PI;
    Ok(LambShift { numeric, approx })
}

/// Adiabatic renormalization factor Δ_r/Δ of a single-qubit tunneling
/// energy after tracing out bath modes above ω_Q. The exponent is used in
/// the same mixed units as printed (ω in rad/ns).
pub fn renorm_factor(eta: f64, nu_c: f64, nu_q: f64) -> f64 {
    let wc = angular(nu_c);
    let wq = angular(nu_q);
    (eta * eta * wc / (4.0 * PI * PI) * ((-2.0 * wq / wc).exp() - 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub nu_min: f64,
    pub nu_max: f64,
}

/// Frequency window where the two-level master equation is trustworthy:
/// above the Lamb-shift floor η r k_BT/(2πh) and below the fast-bath ceiling
/// k_BT/(η r h), with r = Ip(s)²/Ip(1)².
pub fn validity_window(model: &NoiseModel, ip_ratio_sq: f64) -> Result<ValidityWindow> {
    if !(ip_ratio_sq > 0.0 && ip_ratio_sq <= 1.0) {
        return Err(invalid("ip_ratio_sq must lie in (0, 1]"));
    }
    let coupling = model.eta_mrt * ip_ratio_sq;
    let kt = model.kt_ghz();
    Ok(ValidityWindow {
        nu_min: coupling * kt / TWO_PI,
        nu_max: if coupling == 0.0 { f64::INFINITY } else { kt / coupling },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at_end(model: &NoiseModel) -> NoiseAt {
        model.at_ratio(1.0, 1.0)
    }

    #[test]
    fn end_of_anneal_parameters() {
        let m = NoiseModel::main_chip(15.5);
        let at = at_end(&m);
        assert_eq!(at.eta, 0.24);
        assert!((at.w - 0.4).abs() < 1e-15);
        let kt = thermal_ghz(15.5);
        let oracle = (TWO_PI * 0.4).powi(2) / (2.0 * TWO_PI * kt) / TWO_PI;
        assert!((at.eps_p - oracle).abs() < 1e-14);
        assert!((at.eps_p - 0.248).abs() < 1e-3, "{}", at.eps_p);
    }

    #[test]
    fn fdt_recomputed() {
        let m = NoiseModel::main_chip(27.0);
        let at = m.at_ratio(0.3, 0.37);
        let lhs = at.eps_ang();
        let rhs = at.w_ang().powi(2) * at.beta_time / 2.0;
        assert!((lhs - rhs).abs() < 1e-13 * rhs);
        assert!((at.eta / m.eta_mrt - 0.37).abs() < 1e-12);
        assert!(((at.w / m.w_mrt).powi(2) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn zero_frequency_limit() {
        let m = NoiseModel::main_chip(20.0);
        let at = at_end(&m);
        let s0 = spectral_density(&at, &m, 0.0);
        let s_small = spectral_density(&at, &m, 1e-9);
        assert!((s0 - at.eta * at.kt_ang()).abs() < 1e-14);
        assert!((s_small - s0).abs() < 1e-6 * s0);
    }

    #[test]
    fn s_scaling() {
        let m = NoiseModel::main_chip(20.0);
        let a = m.at_ratio(0.3, 0.25);
        let b = at_end(&m);
        let r = spectral_density(&a, &m, 1.3) / spectral_density(&b, &m, 1.3);
        assert!((r - 0.25).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn kms_detailed_balance(nu in 0.001f64..20.0, t in 5.0f64..60.0) {
            let m = NoiseModel::main_chip(t);
            let at = at_end(&m);
            let ratio = spectral_density(&at, &m, -nu) / spectral_density(&at, &m, nu);
            let want = (-nu / m.kt_ghz()).exp();
            prop_assert!((ratio - want).abs() <= 1e-12 * want);
        }

        #[test]
        fn f_conjugate_symmetry(x in -10.0f64..10.0, t in 10.0f64..40.0) {
            let m = NoiseModel::main_chip(t);
            let at = m.at_ratio(0.3, 0.3);
            let tau = x * at.beta_time;
            let a = f_kernel(tau, &at, &m);
            let b = f_kernel(-tau, &at, &m);
            prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0));
        }

        #[test]
        fn sinh_form_tracks_gamma_form(x in -8.0f64..8.0, t in 10.0f64..40.0) {
            // ln G ≈ −ln K; the leftover is O(ln(τ/β)/βω_c).
            let m = NoiseModel::main_chip(t);
            let at = at_end(&m);
            let tau = x * at.beta_time;
            let bw = angular(m.omega_c) * at.beta_time;
            let g = ln_g(tau, angular(m.omega_c), at.beta_time);
            let k = SinhKernel::new(&at, &m).ln_k(tau);
            prop_assert!((g + k).norm() < 4.0 / bw * (1.0 + x.abs().ln_1p()), "{g} vs {k}");
        }
    }

    #[test]
    fn f_without_ohmic_part_is_gaussian() {
        let mut m = NoiseModel::main_chip(15.5);
        m.eta_mrt = 0.0;
        let at = m.at_ratio(0.4, 0.5);
        let tau = 0.37;
        let f = f_kernel(tau, &at, &m);
        let want = Complex64::new(0.5 * at.w_ang().powi(2) * tau * tau, at.eps_ang() * tau);
        assert_eq!(f, want);
    }

    #[test]
    fn g_is_one_at_origin() {
        let m = NoiseModel::main_chip(15.5);
        let at = at_end(&m);
        assert!(ln_g(0.0, angular(m.omega_c), at.beta_time).norm() < 1e-10);
        assert!(f_kernel(0.0, &at, &m).norm() < 1e-10);
        let k = SinhKernel::new(&at, &m);
        assert!(k.ln_k(0.0).norm() < 1e-4);
    }

    #[test]
    fn sinh_derivatives_match_finite_differences() {
        let m = NoiseModel::main_chip(20.0);
        let at = at_end(&m);
        let k = SinhKernel::new(&at, &m);
        for &tau in &[-3.0, -0.01, 0.004, 0.2, 7.0, 200.0] {
            let h = 1e-6 * (1.0 + f64::abs(tau));
            let d1 = (k.ln_k(tau + h) - k.ln_k(tau - h)) / (2.0 * h);
            let d2 = (k.d_ln_k(tau + h) - k.d_ln_k(tau - h)) / (2.0 * h);
            assert!((d1 - k.d_ln_k(tau)).norm() < 1e-5 * k.d_ln_k(tau).norm().max(1.0));
            assert!((d2 - k.d2_ln_k(tau)).norm() < 1e-4 * k.d2_ln_k(tau).norm().max(1.0));
        }
    }

    #[test]
    fn lamb_shift_against_closed_form() {
        let mut m = NoiseModel::main_chip(15.0);
        m.omega_c = 1000.0;
        let nu = 0.5;
        assert!(m.omega_c / nu >= 1e3 && m.omega_c / m.kt_ghz() >= 1e3);
        let ls = lamb_shift(&m, nu, 10.0).unwrap();
        assert!(((ls.numeric - ls.approx) / ls.approx).abs() < 0.1, "{ls:?}");
    }

    #[test]
    fn lamb_shift_zero_coupling_and_kappa_guard() {
        let mut m = NoiseModel::main_chip(15.0);
        assert!(lamb_shift(&m, 1.0, 1.5).is_err());
        m.eta_mrt = 0.0;
        assert_eq!(lamb_shift(&m, 1.0, 4.0).unwrap().numeric, 0.0);
    }

    #[test]
    fn lamb_shift_grows_with_cutoff() {
        let mut m = NoiseModel::main_chip(15.0);
        m.omega_c = 500.0;
        let a = lamb_shift(&m, 0.5, 10.0).unwrap().numeric;
        m.omega_c = 1000.0;
        let b = lamb_shift(&m, 0.5, 10.0).unwrap().numeric;
        assert!(b < a && (b / a - 2.0).abs() < 0.15);
    }

    #[test]
    fn renorm_limits_and_monotonicity() {
        assert_eq!(renorm_factor(0.24, 100.0, 0.0), 1.0);
        let far = renorm_factor(0.24, 100.0, 1e6);
        let limit = (-(0.24f64).powi(2) * angular(100.0) / (4.0 * PI * PI)).exp();
        assert!((far - limit).abs() < 1e-14);
        let mut prev = 1.0;
        for i in 1..200 {
            let f = renorm_factor(0.24, 100.0, i as f64);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn validity_window_earlier_chip() {
        let m = NoiseModel::earlier_chip(15.0);
        let w = validity_window(&m, 1.0 / 3.0).unwrap();
        assert!((w.nu_max - 15.0).abs() / 15.0 < 0.1, "{w:?}");
        assert!((w.nu_min - 1e-3).abs() / 1e-3 < 0.1, "{w:?}");
    }

    #[test]
    fn validity_window_widens() {
        let mut m = NoiseModel::earlier_chip(15.0);
        let mut prev = validity_window(&m, 1.0).unwrap();
        for eta in [0.03, 0.01, 0.001, 0.0] {
            m.eta_mrt = eta;
            let w = validity_window(&m, 1.0).unwrap();
            assert!(w.nu_min < prev.nu_min && w.nu_max > prev.nu_max);
            prev = w;
        }
        assert_eq!(prev.nu_min, 0.0);
        assert!(prev.nu_max.is_infinite());
    }

    #[test]
    fn cutoff_must_exceed_temperature() {
        let mut m = NoiseModel::main_chip(40.0);
        m.omega_c = 10.0;
        assert!(m.validate().is_err());
        assert!(NoiseModel::main_chip(40.0).validate().is_ok());
    }
}
