//! Incoherent transition rates between the two pointer states and the
//! resulting population dynamics along the anneal.
//!
//! The NIBA rate is a time-domain integral over the bath correlation
//! function. The Ohmic part uses the sinh form of the kernel, valid for
//! βω_c ≫ 1; the low-frequency part is Gaussian. The golden-rule rate is the
//! weak-coupling comparator in the adiabatic basis.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::{noise_at, spectral_density, NoiseAt, NoiseModel, SinhKernel};
use crate::quadrature::{integrate_complex, integrate_pair, GkOptions};
use crate::schedule::{fmt_sig, AnnealSchedule};
use crate::spectral::{optimal_rotation, pointer_quantities, rotate, scan, PointerQuantities, SliceRecord};
use crate::spin_model::WeakStrongSpec;
use crate::units::{angular, TWO_PI};

/// Γ·t_qa above which a point counts as thermalized.
pub const THERMALIZED_THRESHOLD: f64 = 10.0;
/// Γ·t_qa below which a point counts as frozen.
pub const FROZEN_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    Niba,
    Fgr,
}

impl RateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RateMethod::Niba => "niba",
            RateMethod::Fgr => "fgr",
        }
    }
}

impl std::str::FromStr for RateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "niba" => Ok(RateMethod::Niba),
            "fgr" => Ok(RateMethod::Fgr),
            other => Err(invalid(format!("unknown rate method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NibaOptions {
    /// Relative change between successive T_max doublings accepted as
    /// converged.
    pub rel_change: f64,
    pub max_doublings: usize,
    /// Results below this fraction of ∫|integrand| are quadrature noise.
    pub noise_floor: f64,
}

impl Default for NibaOptions {
    fn default() -> Self {
        Self {
            rel_change: 1e-6,
            max_doublings: 4,
            noise_floor: 1e-11,
        }
    }
}

/// Rate integral and its first moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateIntegrals {
    /// Γ₁→₀, 1/ns.
    pub gamma: f64,
    /// The NIBA validity coefficient g₁.
    pub g1: f64,
    /// Truncation point actually used, ns.
    pub t_max: f64,
    /// ∫|integrand| over [−T_max, T_max]; sets the noise floor.
    pub scale: f64,
}

/// The complex integrand of the rate, in angular units.
struct RateIntegrand {
    detuning: f64,
    half_w2h: f64,
    eta_h: f64,
    eta: f64,
    eps: f64,
    w2: f64,
    a: f64,
    c_plus: f64,
    c_minus: f64,
    half_delta: f64,
    kernel: SinhKernel,
}

impl RateIntegrand {
    fn new(pq: &PointerQuantities, at: &NoiseAt, model: &NoiseModel) -> Self {
        let c = &pq.coeffs;
        let eps = angular(pq.eps_p);
        let w2 = at.w_ang().powi(2);
        Self {
            detuning: angular(pq.omega10_star) - (c.h + c.d) * eps,
            half_w2h: 0.5 * c.h * w2,
            eta_h: c.h * at.eta / TWO_PI,
            eta: at.eta / TWO_PI,
            eps,
            w2,
            a: c.a,
            c_plus: c.c_plus,
            c_minus: c.c_minus,
            half_delta: 0.5 * angular(pq.delta_star),
            kernel: SinhKernel::new(at, model),
        }
    }

    fn eval(&self, tau: f64) -> Complex64 {
        let i = Complex64::i();
        let (mut exponent, mut f_t, mut f_tt) = (
            Complex64::new(-self.half_w2h * tau * tau, self.detuning * tau),
            Complex64::new(self.w2 * tau, self.eps),
            Complex64::new(self.w2, 0.0),
        );
        if self.eta != 0.0 {
            exponent -= self.eta_h * self.kernel.ln_k(tau);
            f_t += self.eta * self.kernel.d_ln_k(tau);
            f_tt += self.eta * self.kernel.d2_ln_k(tau);
        }
        let drive = self.eps * self.c_plus - i * self.c_minus * f_t - self.half_delta;
        exponent.exp() * (self.a * f_tt + drive * drive)
    }

    /// The integrand at complex τ when the bath is purely Gaussian, where
    /// it is entire.
    fn eval_gaussian(&self, tau: Complex64) -> Complex64 {
        let i = Complex64::i();
        let exponent = -self.half_w2h * tau * tau + i * self.detuning * tau;
        let f_t = self.w2 * tau + i * self.eps;
        let drive = self.eps * self.c_plus - i * self.c_minus * f_t - self.half_delta;
        exponent.exp() * (self.a * self.w2 + drive * drive)
    }

    /// Γ for η = 0 along the horizontal line through the Gaussian saddle,
    /// where the integrand no longer oscillates. On the real axis the deep
    /// tails of the line cancel below double precision.
    fn gaussian_gamma(&self) -> f64 {
        let width = (2.0 * self.half_w2h).sqrt();
        let shift = self.detuning / (2.0 * self.half_w2h);
        let gk = GkOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            cancel_tol: 1e-15,
            max_intervals: 2_000,
        };
        let t_max = 12.0 / width;
        let nodes: Vec<f64> = (0..=8).map(|k| t_max * k as f64 / 8.0).collect();
        let half = integrate_complex(|t| self.eval_gaussian(Complex64::new(t, shift)), &nodes, &gk);
        2.0 * half.value.re
    }

    /// Initial truncation point.
    fn t_max(&self, pq: &PointerQuantities) -> f64 {
        let mut t = 20.0 * self.kernel.beta;
        if self.half_w2h > 0.0 {
            t = t.max(8.0 / (2.0 * self.half_w2h).sqrt());
        }
        t.max(100.0 / (angular(pq.omega10_star).abs() + 1e-3))
    }
}

/// Breakpoints on [lo, hi], geometric from the kernel's short time scale.
fn breakpoints(lo: f64, hi: f64, tau_c: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut t = tau_c.max(lo * 1.5);
    while t < hi {
        if t > lo {
            out.push(t);
        }
        t *= 3.0;
    }
    out.push(hi);
    out
}

/// Γ₁→₀ and g₁ by adaptive quadrature with T_max doubling.
///
/// The integrand is Hermitian in τ, so both quantities are twice the real
/// part of the half-line integral. ε_p is taken from `pq`; η, W and β from
/// `at`.
pub fn niba_integrals(pq: &PointerQuantities, at: &NoiseAt, model: &NoiseModel, opts: &NibaOptions) -> Result<RateIntegrals> {
    if !(pq.coeffs.h > 0.0) {
        return Err(invalid(format!("Hamming distance must be positive, got {}", pq.coeffs.h)));
    }
    let f = RateIntegrand::new(pq, at, model);
    let gk = GkOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        cancel_tol: 1e-13,
        max_intervals: 20_000,
    };
    let pair = |tau: f64| {
        let v = f.eval(tau);
        [v.re, tau * v.re]
    };
    let mut t_max = f.t_max(pq);
    let first = integrate_pair(pair, &breakpoints(0.0, t_max, f.kernel.tau_c), &gk);
    let (mut sum, mut scale) = (first.value, first.abs_integral);
    let mut previous = f64::NAN;
    let mut converged = false;
    for _ in 0..=opts.max_doublings {
        let tail = integrate_pair(pair, &breakpoints(t_max, 2.0 * t_max, f.kernel.tau_c), &gk);
        let next = [sum[0] + tail.value[0], sum[1] + tail.value[1]];
        scale += tail.abs_integral;
        let floor = opts.noise_floor * scale;
        previous = sum[0];
        let close = |a: f64, b: f64, tol_abs: f64| (a - b).abs() <= opts.rel_change * a.abs().max(b.abs()) + tol_abs;
        let done = close(next[0], sum[0], floor) && close(next[1], sum[1], floor * t_max);
        sum = next;
        t_max *= 2.0;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::QuadratureNonConvergence {
            doublings: opts.max_doublings,
            estimate: 2.0 * sum[0],
            previous: 2.0 * previous,
        });
    }
    let scale = 2.0 * scale;
    let mut gamma = 2.0 * sum[0];
    if at.eta == 0.0 && f.half_w2h > 0.0 {
        gamma = f.gaussian_gamma();
    }
    let floor = opts.noise_floor * scale;
    if gamma < -(1e-9 * gamma.abs() + floor) {
        return Err(Error::NegativeRate { value: gamma, scale });
    }
    if gamma.abs() <= floor {
        gamma = gamma.max(0.0);
    }
    Ok(RateIntegrals {
        gamma,
        g1: 2.0 * sum[1],
        t_max,
        scale,
    })
}

/// NIBA rate Γ₁→₀ from the upper to the lower pointer state, 1/ns.
pub fn niba_rate(pq: &PointerQuantities, at: &NoiseAt, model: &NoiseModel) -> Result<f64> {
    niba_integrals(pq, at, model, &NibaOptions::default()).map(|r| r.gamma)
}

/// The NIBA validity coefficient; the approximation holds when it is ≪ 1.
pub fn g1_criterion(pq: &PointerQuantities, at: &NoiseAt, model: &NoiseModel) -> Result<f64> {
    niba_integrals(pq, at, model, &NibaOptions::default()).map(|r| r.g1)
}

/// Golden-rule rate a·S(ω₁₀) in 1/ns. A negative `omega10` gives the
/// upward rate.
pub fn fgr_rate(a: f64, omega10: f64, at: &NoiseAt, model: &NoiseModel) -> f64 {
    a * spectral_density(at, model, omega10)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub s: f64,
    pub method: RateMethod,
    pub theta_star: f64,
    /// Adiabatic gap E₁ − E₀, GHz.
    pub omega10: f64,
    /// Splitting of the two states the rates connect, GHz.
    pub omega: f64,
    pub delta_star: f64,
    pub h_star: f64,
    pub a_star: f64,
    pub gamma_10: f64,
    pub gamma_01: f64,
    pub g1: f64,
    /// The two states exchanged labels relative to the previous point, as
    /// happens when the pointer splitting changes sign.
    pub relabeled: bool,
}

impl RatePoint {
    pub fn total(&self) -> f64 {
        self.gamma_10 + self.gamma_01
    }
}

fn boltzmann(omega_ghz: f64, at: &NoiseAt) -> f64 {
    (-angular(omega_ghz) * at.beta_time).exp()
}

fn rate_point(record: &SliceRecord, schedule: &AnnealSchedule, model: &NoiseModel, method: RateMethod) -> Result<RatePoint> {
    let s = record.slice.s;
    let base = noise_at(model, schedule, s);
    let (pq, at) = match method {
        RateMethod::Niba => {
            let at = base.suppressed_for(model, record.pointer.delta_star);
            let pq = pointer_quantities(&record.slice, &record.z, record.rotation.theta, at.eps_p)?;
            (pq, at)
        }
        RateMethod::Fgr => (pointer_quantities(&record.slice, &record.z, FRAC_PI_2, 0.0)?, base),
    };
    let (gamma_10, g1) = match method {
        RateMethod::Niba => {
            let r = niba_integrals(&pq, &at, model, &NibaOptions::default())?;
            (r.gamma, r.g1)
        }
        RateMethod::Fgr => (fgr_rate(pq.coeffs.a, pq.omega10, &at, model), 0.0),
    };
    Ok(RatePoint {
        s,
        method,
        theta_star: pq.theta_star,
        omega10: pq.omega10,
        omega: pq.omega,
        delta_star: pq.delta_star,
        h_star: pq.coeffs.h,
        a_star: pq.coeffs.a,
        gamma_10,
        gamma_01: gamma_10 * boltzmann(pq.omega, &at),
        g1,
        relabeled: false,
    })
}

/// Rates on `s_grid`. Slices and rates are computed in parallel; θ* is
/// continued sequentially between neighbours.
pub fn rate_points(
    schedule: &AnnealSchedule,
    spec: &WeakStrongSpec,
    model: &NoiseModel,
    method: RateMethod,
    s_grid: &[f64],
) -> Result<Vec<RatePoint>> {
    model.validate()?;
    let records = scan(schedule, spec, s_grid, Some(model))?;
    let mut points: Vec<RatePoint> = records
        .par_iter()
        .map(|r| {
            rate_point(r, schedule, model, method).map_err(|e| Error::RateAt {
                s: r.slice.s,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    if method == RateMethod::Niba {
        for k in 1..points.len() {
            points[k].relabeled = labels_swapped(&records[k - 1], &records[k]);
        }
    }
    Ok(points)
}

/// σᶻ profiles of the two pointer states.
fn pointer_profiles(record: &SliceRecord) -> (Vec<f64>, Vec<f64>) {
    let rotated = rotate(&record.z, record.rotation.theta);
    rotated.blocks.iter().map(|b| (b[0][0], b[1][1])).unzip()
}

/// Whether the pointer states at `next` match those at `prev` with their
/// labels exchanged. Matching is by magnetization profile, which is free of
/// the eigenvector sign ambiguity and stays well defined through an avoided
/// crossing where the adiabatic labels swap.
fn labels_swapped(prev: &SliceRecord, next: &SliceRecord) -> bool {
    let (a0, a1) = pointer_profiles(prev);
    let (b0, b1) = pointer_profiles(next);
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    dist(&a0, &b1) + dist(&a1, &b0) < dist(&a0, &b0) + dist(&a1, &b1)
}

/// A uniform grid of `steps + 1` points on [s_start, 1].
pub fn anneal_grid(s_start: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| s_start + (1.0 - s_start) * k as f64 / steps as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Thermalized,
    Slowdown,
    Frozen,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Thermalized => "thermalized",
            Phase::Slowdown => "slowdown",
            Phase::Frozen => "frozen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub s: f64,
    pub gamma_10: f64,
    pub omega: f64,
    /// ρ₁₁ − ρ₀₀ in the labels of this point.
    pub z: f64,
    pub z_eq: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    pub s_therm: f64,
    pub s_frozen: f64,
    /// Γt_qa never reached the thermalization threshold.
    pub never_thermalized: bool,
    /// Γt_qa never reached the frozen threshold.
    pub never_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub rows: Vec<TraceRow>,
    pub p_success: f64,
    pub boundaries: PhaseBoundaries,
}

impl EvolutionTrace {
    /// First point where the lower-state population departs from its Gibbs
    /// value by more than `tol` relative.
    pub fn equilibrium_exit(&self, tol: f64) -> Option<usize> {
        self.rows.iter().position(|r| {
            let p = 0.5 * (1.0 - r.z);
            let p_eq = 0.5 * (1.0 - r.z_eq);
            (p - p_eq).abs() > tol * p_eq
        })
    }
}

/// Phase boundaries from Γ₁→₀·t_qa crossing the two thresholds.
pub fn classify_phases(rates: &[RatePoint], t_qa: f64) -> PhaseBoundaries {
    let last_above = |th: f64| rates.iter().rev().find(|r| r.gamma_10 * t_qa >= th).map(|r| r.s);
    let therm = last_above(THERMALIZED_THRESHOLD);
    let frozen = last_above(FROZEN_THRESHOLD);
    let s_frozen = frozen.unwrap_or(0.0);
    PhaseBoundaries {
        s_therm: therm.unwrap_or(0.0).min(s_frozen),
        s_frozen,
        never_thermalized: therm.is_none(),
        never_active: frozen.is_none(),
    }
}

fn equilibrium(omega_ghz: f64, beta_time: f64) -> f64 {
    -(0.5 * angular(omega_ghz) * beta_time).tanh()
}

/// Logarithmic mean, the exact average of an exponential between the
/// endpoints.
fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b);
    }
    let r = b / a;
    if (r - 1.0).abs() < 1e-6 {
        0.5 * (a + b)
    } else {
        (b - a) / r.ln()
    }
}

/// Exact solution of ż = −Γ(z − z_eq(t)) over one interval with constant Γ
/// and z_eq linear from `eq0` to `eq1`; `x` = Γ·Δt.
fn relax(z: f64, eq0: f64, eq1: f64, x: f64) -> f64 {
    if x < 1e-8 {
        return z + x * (0.5 * (eq0 + eq1) - z);
    }
    let decay = (-x).exp();
    eq1 + (z - eq0) * decay - (eq1 - eq0) * (-(-x).exp_m1()) / x
}

/// Integrate the two-state rate equation over precomputed rate points.
///
/// Starts thermalized at the first point. Each interval is solved exactly
/// with the logarithmic mean of the endpoint rates and an equilibrium
/// linear between its endpoint values. When the state labels swap, z changes sign so the physical
/// populations stay continuous.
pub fn integrate_rates(rates: &[RatePoint], model: &NoiseModel) -> Result<EvolutionTrace> {
    integrate_rates_from(rates, model, None)
}

/// As [`integrate_rates`], starting from `z0` instead of equilibrium.
pub fn integrate_rates_from(rates: &[RatePoint], model: &NoiseModel, z0: Option<f64>) -> Result<EvolutionTrace> {
    if rates.len() < 2 {
        return Err(invalid("need at least two rate points"));
    }
    let beta = model.at_ratio(0.0, 1.0).beta_time;
    let boundaries = classify_phases(rates, model.t_qa);
    let phase = |s: f64| {
        if !boundaries.never_thermalized && s <= boundaries.s_therm {
            Phase::Thermalized
        } else if !boundaries.never_active && s <= boundaries.s_frozen {
            Phase::Slowdown
        } else {
            Phase::Frozen
        }
    };
    let z_start_eq = equilibrium(rates[0].omega, beta);
    let mut z = z0.unwrap_or(z_start_eq);
    let mut rows = Vec::with_capacity(rates.len());
    rows.push(TraceRow {
        s: rates[0].s,
        gamma_10: rates[0].gamma_10,
        omega: rates[0].omega,
        z,
        z_eq: z_start_eq,
        phase: phase(rates[0].s),
    });
    for w in rates.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let mut z_prev_eq = equilibrium(prev.omega, beta);
        if next.relabeled {
            z = -z;
            z_prev_eq = -z_prev_eq;
        }
        let z_eq = equilibrium(next.omega, beta);
        let x = log_mean(prev.total(), next.total()) * model.t_qa * (next.s - prev.s);
        z = relax(z, z_prev_eq, z_eq, x).clamp(-1.0, 1.0);
        rows.push(TraceRow {
            s: next.s,
            gamma_10: next.gamma_10,
            omega: next.omega,
            z,
            z_eq,
            phase: phase(next.s),
        });
    }
    Ok(EvolutionTrace {
        p_success: 0.5 * (1.0 - z),
        rows,
        boundaries,
    })
}

/// Rates on a uniform grid from `s_start` to 1, then the rate equation.
pub fn evolve_populations(
    schedule: &AnnealSchedule,
    spec: &WeakStrongSpec,
    model: &NoiseModel,
    method: RateMethod,
    s_start: f64,
    steps: usize,
) -> Result<(Vec<RatePoint>, EvolutionTrace)> {
    if !(0.0..1.0).contains(&s_start) || steps < 2 {
        return Err(invalid("need s_start in [0, 1) and at least 2 steps"));
    }
    let rates = rate_points(schedule, spec, model, method, &anneal_grid(s_start, steps))?;
    let trace = integrate_rates(&rates, model)?;
    Ok((rates, trace))
}

pub const TRACE_HEADER: [&str; 5] = ["s", "gamma10_per_ns", "omega_ghz", "z", "phase"];

pub fn write_trace_csv<W: Write>(trace: &EvolutionTrace, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRACE_HEADER)?;
    for r in &trace.rows {
        let [s, g, o, z] = [r.s, r.gamma_10, r.omega, r.z].map(fmt_sig);
        wr.write_record([s, g, o, z, r.phase.as_str().to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub const RATES_HEADER: [&str; 12] = [
    "s",
    "method",
    "theta_star",
    "omega10_ghz",
    "omega_ghz",
    "delta_star_ghz",
    "h_star",
    "a_star",
    "gamma10_per_ns",
    "gamma01_per_ns",
    "g1",
    "relabeled",
];

pub fn write_rates_csv<W: Write>(rates: &[RatePoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(RATES_HEADER)?;
    for r in rates {
        let nums = [r.theta_star, r.omega10, r.omega, r.delta_star, r.h_star, r.a_star, r.gamma_10, r.gamma_01, r.g1].map(fmt_sig);
        let mut row = vec![fmt_sig(r.s), r.method.as_str().to_string()];
        row.extend(nums);
        row.push(u8::from(r.relabeled).to_string());
        wr.write_record(row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub method: RateMethod,
    pub spec: WeakStrongSpec,
    pub noise: NoiseModel,
    pub s_start: f64,
    pub steps: usize,
    pub p_success: f64,
    pub boundaries: PhaseBoundaries,
    /// Where the populations leave Gibbs equilibrium by 1 %.
    pub s_eq: Option<f64>,
    pub g1_at_s_eq: Option<f64>,
}

impl EvolutionSummary {
    pub fn new(
        method: RateMethod,
        spec: WeakStrongSpec,
        noise: NoiseModel,
        s_start: f64,
        rates: &[RatePoint],
        trace: &EvolutionTrace,
    ) -> Self {
        let exit = trace.equilibrium_exit(0.01);
        Self {
            method,
            spec,
            noise,
            s_start,
            steps: rates.len().saturating_sub(1),
            p_success: trace.p_success,
            boundaries: trace.boundaries,
            s_eq: exit.map(|k| rates[k].s),
            g1_at_s_eq: exit.map(|k| rates[k].g1),
        }
    }
}

/// Gaussian perturbation of the problem fields, as from analog control
/// errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlNoise {
    pub sigma_h: f64,
    pub sigma_j: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ControlNoise {
    fn default() -> Self {
        Self {
            sigma_h: 0.05,
            sigma_j: 0.035,
            samples: 16,
            seed: 0,
        }
    }
}

impl ControlNoise {
    /// Perturbed copies of `spec`, clamped to the [−1, 1] hardware range.
    pub fn draw(&self, spec: &WeakStrongSpec) -> Result<Vec<WeakStrongSpec>> {
        let h = Normal::new(0.0, self.sigma_h).map_err(|e| invalid(e.to_string()))?;
        let j = Normal::new(0.0, self.sigma_j).map_err(|e| invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..self.samples)
            .map(|_| WeakStrongSpec {
                h1: (spec.h1 + h.sample(&mut rng)).clamp(-1.0, 1.0),
                h2: (spec.h2 + h.sample(&mut rng)).clamp(-1.0, 1.0),
                j: (spec.j + j.sample(&mut rng)).clamp(-1.0, 1.0),
                ..*spec
            })
            .collect())
    }
}

/// Mean and standard error of p_success over control-noise draws.
pub fn averaged_success(
    schedule: &AnnealSchedule,
    spec: &WeakStrongSpec,
    model: &NoiseModel,
    method: RateMethod,
    s_start: f64,
    steps: usize,
    noise: &ControlNoise,
) -> Result<(f64, f64)> {
    let draws = noise.draw(spec)?;
    let mut ps = Vec::with_capacity(draws.len());
    for d in &draws {
        ps.push(evolve_populations(schedule, d, model, method, s_start, steps)?.1.p_success);
    }
    let n = ps.len() as f64;
    let mean = ps.iter().sum::<f64>() / n;
    let var = ps.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (var / n).sqrt()))
}

/// θ minimizing the NIBA rate at one slice, as an alternative to the
/// Hamming-distance pointer basis.
pub fn min_rate_rotation(record: &SliceRecord, at: &NoiseAt, model: &NoiseModel) -> Result<(f64, f64)> {
    let seed = optimal_rotation(&record.z, None).theta;
    let rate = |theta: f64| -> f64 {
        pointer_quantities(&record.slice, &record.z, theta, at.eps_p)
            .and_then(|pq| niba_rate(&pq, at, model))
            .map_or(f64::NEG_INFINITY, |g| -g)
    };
    let best = crate::spectral::maximize_periodic(rate, Some(seed));
    let theta = best.theta.rem_euclid(PI);
    let pq = pointer_quantities(&record.slice, &record.z, theta, at.eps_p)?;
    Ok((theta, niba_rate(&pq, at, model)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::BasisCoefficients;
    use proptest::prelude::*;

    fn qubit_pq(omega_ghz: f64, delta_ghz: f64, eps_p: f64) -> PointerQuantities {
        PointerQuantities {
            s: 1.0,
            theta_star: FRAC_PI_2,
            omega10: omega_ghz.hypot(delta_ghz),
            omega: omega_ghz - eps_p * 0.0,
            omega10_star: omega_ghz,
            delta_star: delta_ghz,
            eps_p,
            coeffs: BasisCoefficients {
                a: 0.0,
                h: 1.0,
                d: 0.0,
                c_plus: 0.0,
                c_minus: 0.0,
            },
        }
    }

    fn gaussian_bath(w: f64) -> NoiseAt {
        NoiseAt {
            s: 1.0,
            eta: 0.0,
            w,
            eps_p: 0.0,
            beta_time: 1.0 / angular(0.323),
        }
    }

    fn mrt_line(pq: &PointerQuantities, w: f64) -> f64 {
        let w = angular(w);
        let det = angular(pq.omega10_star) - angular(pq.eps_p);
        (0.5 * angular(pq.delta_star)).powi(2) * (TWO_PI / (w * w)).sqrt() * (-det * det / (2.0 * w * w)).exp()
    }

    #[test]
    fn gaussian_line_oracle() {
        let model = NoiseModel::default();
        let pq = qubit_pq(0.3, 0.01, 0.05);
        let at = gaussian_bath(0.2);
        let got = niba_rate(&pq, &at, &model).unwrap();
        let want = mrt_line(&pq, 0.2);
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn gaussian_line_over_parameters(omega in 0.0..1.0f64, eps in 0.0..0.3f64, w in 0.05..0.5f64) {
            let model = NoiseModel::default();
            let pq = qubit_pq(omega, 0.02, eps);
            let got = niba_rate(&pq, &gaussian_bath(w), &model).unwrap();
            let want = mrt_line(&pq, w);
            prop_assert!((got - want).abs() <= 1e-6 * want, "{} vs {}", got, want);
        }
    }

    #[test]
    fn zero_drive_gives_zero() {
        let model = NoiseModel::default();
        let pq = qubit_pq(0.2, 0.0, 0.01);
        let at = model.at_ratio(1.0, 1.0);
        let r = niba_integrals(&pq, &at, &model, &NibaOptions::default()).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(r.g1, 0.0);
    }

    #[test]
    fn rejects_zero_hamming() {
        let model = NoiseModel::default();
        let mut pq = qubit_pq(0.2, 0.1, 0.0);
        pq.coeffs.h = 0.0;
        assert!(niba_rate(&pq, &model.at_ratio(1.0, 1.0), &model).is_err());
    }

    #[test]
    fn ohmic_rate_is_positive_and_stable_under_doubling() {
        let model = NoiseModel::default();
        let at = model.at_ratio(0.5, 0.3);
        let mut pq = qubit_pq(0.5, 0.2, at.eps_p);
        pq.coeffs = BasisCoefficients {
            a: 0.3,
            h: 4.0,
            d: 0.5,
            c_plus: 0.1,
            c_minus: -0.2,
        };
        let base = niba_integrals(&pq, &at, &model, &NibaOptions::default()).unwrap();
        assert!(base.gamma > 0.0);
        let strict = NibaOptions {
            rel_change: 1e-9,
            max_doublings: 8,
            ..NibaOptions::default()
        };
        let tight = niba_integrals(&pq, &at, &model, &strict).unwrap();
        assert!((tight.gamma - base.gamma).abs() < 1e-5 * base.gamma);
    }

    #[test]
    fn fgr_detailed_balance() {
        let model = NoiseModel::default();
        let at = model.at_ratio(0.6, 0.5);
        let nu = 0.4;
        let down = fgr_rate(0.2, nu, &at, &model);
        let up = fgr_rate(0.2, -nu, &at, &model);
        assert!((up / down - boltzmann(nu, &at)).abs() < 1e-12);
        assert_eq!(fgr_rate(0.0, nu, &at, &model), 0.0);
    }

    fn constant_rates(gamma: f64, omega: f64, n: usize) -> Vec<RatePoint> {
        let at = NoiseModel::default().at_ratio(1.0, 1.0);
        anneal_grid(0.5, n - 1)
            .into_iter()
            .map(|s| RatePoint {
                s,
                method: RateMethod::Niba,
                theta_star: FRAC_PI_2,
                omega10: omega,
                omega,
                delta_star: 0.0,
                h_star: 1.0,
                a_star: 0.0,
                gamma_10: gamma,
                gamma_01: gamma * boltzmann(omega, &at),
                g1: 0.0,
                relabeled: false,
            })
            .collect()
    }

    #[test]
    fn zero_rate_keeps_z() {
        let model = NoiseModel::default();
        let mut rates = constant_rates(0.0, 0.2, 50);
        for (k, r) in rates.iter_mut().enumerate() {
            r.omega = 0.2 + 0.01 * k as f64;
        }
        let trace = integrate_rates(&rates, &model).unwrap();
        let z0 = trace.rows[0].z;
        assert!(trace.rows.iter().all(|r| r.z == z0));
        assert!(trace.boundaries.never_active && trace.boundaries.s_frozen == 0.0);
    }

    #[test]
    fn fast_rates_track_equilibrium() {
        let model = NoiseModel::default();
        let rates = constant_rates(10.0, 0.3, 30);
        let trace = integrate_rates(&rates, &model).unwrap();
        let want = 0.5 * (1.0 + (0.5 * angular(0.3) / angular(model.kt_ghz())).tanh());
        assert!((trace.p_success - want).abs() < 1e-12);
        assert_eq!(trace.boundaries.s_therm, 1.0);
        assert!(trace.rows.iter().all(|r| r.phase == Phase::Thermalized));
    }

    #[test]
    fn converges_to_equilibrium_from_offset() {
        let model = NoiseModel::default();
        let mut rates = constant_rates(1e-3, 0.25, 11);
        let span = 50.0 / rates[0].total() / model.t_qa;
        for (k, r) in rates.iter_mut().enumerate() {
            r.s = 0.1 + span * k as f64 / 10.0;
        }
        let trace = integrate_rates_from(&rates, &model, Some(0.9)).unwrap();
        let last = trace.rows.last().unwrap();
        assert!((last.z - last.z_eq).abs() < 1e-10, "{}", last.z - last.z_eq);
        assert!(trace.rows.iter().all(|r| (-1.0..=1.0).contains(&r.z)));
    }

    #[test]
    fn relax_limits() {
        assert_eq!(relax(0.3, -0.2, -0.4, 0.0), 0.3);
        assert!((relax(0.3, -0.2, -0.2, 1.0) - (-0.2 + 0.5 * (-1f64).exp())).abs() < 1e-15);
        // Fast relaxation lags a moving equilibrium by its slope over Γ.
        let x = 1e6;
        assert!((relax(0.3, -0.2, -0.4, x) - (-0.4 + 0.2 / x)).abs() < 1e-12);
        // Both sides of the small-x switch agree with the first-order series;
        // the next term is below 1e-15.
        for x in [0.99e-8, 1.01e-8] {
            let series = 0.3 + x * (-0.3 - 0.3);
            assert!((relax(0.3, -0.2, -0.4, x) - series).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn relabel_flips_sign() {
        let model = NoiseModel::default();
        let mut rates = constant_rates(0.0, 0.2, 4);
        rates[2].relabeled = true;
        let trace = integrate_rates(&rates, &model).unwrap();
        assert_eq!(trace.rows[2].z, -trace.rows[1].z);
    }

    #[test]
    fn phase_boundaries() {
        let mut rates = constant_rates(0.0, 0.2, 11);
        let t_qa = 100.0;
        for (k, r) in rates.iter_mut().enumerate() {
            r.gamma_10 = 10f64.powi(1 - k as i32 + 1) / t_qa;
        }
        let b = classify_phases(&rates, t_qa);
        assert!((b.s_therm - rates[1].s).abs() < 1e-12);
        assert!((b.s_frozen - rates[3].s).abs() < 1e-12);
        assert!(!b.never_thermalized && !b.never_active);
    }

    #[test]
    fn control_noise_is_seeded() {
        let spec = WeakStrongSpec::default();
        let c = ControlNoise::default();
        assert_eq!(c.draw(&spec).unwrap(), c.draw(&spec).unwrap());
        let other = ControlNoise { seed: 1, ..c };
        assert_ne!(c.draw(&spec).unwrap(), other.draw(&spec).unwrap());
        assert!(c.draw(&spec).unwrap().iter().all(|d| d.validate().is_ok()));
    }
}
