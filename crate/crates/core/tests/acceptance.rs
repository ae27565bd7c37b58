//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run all with `cargo test --test acceptance`, or a subset with
//! `cargo test --test acceptance -- 2 5 9`. Criteria listed in
//! `KNOWN_FAILURES` are expected to fail; the process exits nonzero when any
//! other criterion fails or a known failure starts passing.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use qa_lab::experiments::{run_experiment, Experiment, ExperimentConfig, GlassParams, LambParams};
use qa_lab::linalg::{lanczos_lowest, LanczosOptions};
use qa_lab::niba::{evolve_populations, integrate_rates_from, niba_rate, RateMethod, RatePoint};
use qa_lab::noise::{NoiseAt, NoiseModel};
use qa_lab::schedule::{build_schedule, AnnealSchedule, FluxQubitParams};
use qa_lab::semiclassical::{instanton_gap, track_minima, AttemptRate};
use qa_lab::spectral::{min_gap, slice_at, BasisCoefficients, PointerQuantities};
use qa_lab::spin_model::{build_exact_hamiltonian, WeakStrongSpec};
use qa_lab::svmc::{
    chi_correct, generate_problem, kramer_fit, run_seed, svmc_success, KramerConfig, ProblemKind, SuccessEstimate,
    SvmcConfig,
};
use qa_lab::units::{angular, thermal_ghz};
use qa_lab::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 1: the mean-field inter-cell coupling of the subspace model is off by
/// 1.1e-3 near s = 0.16 with the reconstructed schedule.
/// 6: SVMC at h1 = 0.44 plateaus between 30 and 40 mK (0.562, 0.555, 0.554)
/// although the fitted slope is positive at 95 %.
/// 7: p_success at h1 = 0.38 comes out at 0.936 with the main-chip noise model.
/// 10: the glass exponent comes out at 0.0125 ± 0.0018, below the 0.013 bound.
const KNOWN_FAILURES: &[usize] = &[1, 6, 7, 10];

const TEMPS_MK: [f64; 6] = [15.5, 20.0, 25.0, 30.0, 35.0, 40.0];
const NIBA_STEPS: usize = 200;
const S_START: f64 = 0.12;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct NibaRun {
    rates: Vec<RatePoint>,
    p_success: f64,
    s_therm: f64,
    never_thermalized: bool,
}

/// Shared inputs: the flux-qubit schedule and NIBA runs keyed by (h1, T).
#[derive(Default)]
struct Ctx {
    schedule: OnceCell<AnnealSchedule>,
    niba: RefCell<HashMap<(u64, u64), std::rc::Rc<NibaRun>>>,
}

impl Ctx {
    fn schedule(&self) -> &AnnealSchedule {
        self.schedule
            .get_or_init(|| build_schedule(&FluxQubitParams::default(), 101).expect("schedule"))
    }

    fn niba(&self, h1: f64, temp_mk: f64) -> Result<std::rc::Rc<NibaRun>> {
        let key = (h1.to_bits(), temp_mk.to_bits());
        if let Some(run) = self.niba.borrow().get(&key) {
            return Ok(run.clone());
        }
        let spec = WeakStrongSpec::with_h1(h1);
        let model = NoiseModel::main_chip(temp_mk);
        let (rates, trace) = evolve_populations(self.schedule(), &spec, &model, RateMethod::Niba, S_START, NIBA_STEPS)?;
        let run = std::rc::Rc::new(NibaRun {
            rates,
            p_success: trace.p_success,
            s_therm: trace.boundaries.s_therm,
            never_thermalized: trace.boundaries.never_thermalized,
        });
        self.niba.borrow_mut().insert(key, run.clone());
        Ok(run)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fmt_list(xs: &[f64], digits: usize) -> String {
    xs.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(" ")
}

fn subspace_vs_exact(ctx: &Ctx) -> Result<Outcome> {
    let spec = WeakStrongSpec::with_h1(0.44);
    let schedule = ctx.schedule();
    let (mut worst, mut worst_s) = (0.0f64, 0.0);
    for k in 0..20 {
        let s = 0.1 + 0.4 * k as f64 / 19.0;
        let (a, b) = schedule.ab_at(s);
        let exact = lanczos_lowest(&build_exact_hamiltonian(&spec, a, b)?, 2, &LanczosOptions::default())?;
        let (slice, _) = slice_at(schedule, &spec, s, 2)?;
        for i in 0..2 {
            let d = rel(slice.energies[i], exact.values[i]);
            if d > worst {
                (worst, worst_s) = (d, s);
            }
        }
    }
    Ok(Outcome::new(
        worst < 1e-3,
        format!("worst relative difference {worst:.2e} at s {worst_s:.3} over 20 points"),
    ))
}

fn minimum_gap(ctx: &Ctx) -> Result<Outcome> {
    let schedule = ctx.schedule();
    let mid = min_gap(schedule, &WeakStrongSpec::with_h1(0.44), 0.15, 0.45, 61)?;
    let hard = min_gap(schedule, &WeakStrongSpec::with_h1(0.48), 0.15, 0.60, 91)?;
    let pass = rel(mid.gap, 0.18) <= 0.25 && (mid.s - 0.26).abs() <= 0.03 && (0.005..=0.020).contains(&hard.gap);
    Ok(Outcome::new(
        pass,
        format!(
            "h1 0.44: {:.1} MHz at s {:.3}; h1 0.48: {:.1} MHz",
            1e3 * mid.gap,
            mid.s,
            1e3 * hard.gap
        ),
    ))
}

fn instanton_table(ctx: &Ctx) -> Result<Outcome> {
    let schedule = ctx.schedule();
    let s_grid: Vec<f64> = (0..=100).map(|k| 0.1 + 0.5 * k as f64 / 100.0).collect();
    let rows = [(0.48, 0.005, 0.010), (0.47, 0.033, 0.036), (0.46, 0.085, 0.078)];
    let mut pass = true;
    let mut got = Vec::new();
    for (h1, estimate, exact) in rows {
        let spec = WeakStrongSpec::with_h1(h1);
        let Some(s_c) = track_minima(schedule, &spec, &s_grid)?.s_c else {
            return Ok(Outcome::new(false, format!("no degenerate point at h1 {h1}")));
        };
        let gap = instanton_gap(&spec, schedule, s_c, AttemptRate::default())?.gap_ghz;
        let ratio = gap / exact;
        pass &= rel(gap, estimate) <= 0.4 && (1.0 / 2.5..=2.5).contains(&ratio);
        got.push(1e3 * gap);
    }
    Ok(Outcome::new(pass, format!("gaps {} MHz", fmt_list(&got, 1))))
}

fn mrt_line(omega: f64, delta: f64, eps_p: f64, w: f64) -> f64 {
    let (w, det) = (angular(w), angular(omega) - angular(eps_p));
    (0.5 * angular(delta)).powi(2) * (TAU / (w * w)).sqrt() * (-det * det / (2.0 * w * w)).exp()
}

fn niba_oracle(_: &Ctx) -> Result<Outcome> {
    let model = NoiseModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let omega: f64 = rng.random_range(0.0..1.0);
        let eps_p = rng.random_range(0.0..0.3);
        let w = rng.random_range(0.05..0.5);
        let delta = 0.02;
        let pq = PointerQuantities {
            s: 1.0,
            theta_star: FRAC_PI_2,
            omega10: omega.hypot(delta),
            omega,
            omega10_star: omega,
            delta_star: delta,
            eps_p,
            coeffs: BasisCoefficients {
                a: 0.0,
                h: 1.0,
                d: 0.0,
                c_plus: 0.0,
                c_minus: 0.0,
            },
        };
        let at = NoiseAt {
            s: 1.0,
            eta: 0.0,
            w,
            eps_p: 0.0,
            beta_time: 1.0 / angular(thermal_ghz(15.5)),
        };
        let want = mrt_line(omega, delta, eps_p, w);
        let got = niba_rate(&pq, &at, &model)?;
        worst = worst.max((got - want).abs() / want);
    }
    Ok(Outcome::new(worst < 1e-6, format!("worst relative error {worst:.2e} over 50 points")))
}

fn balance_and_stationarity(ctx: &Ctx) -> Result<Outcome> {
    let run = ctx.niba(0.44, 15.5)?;
    let kt = thermal_ghz(15.5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for r in &run.rates {
        let boltzmann = (-r.omega / kt).exp();
        if r.gamma_10 > 0.0 && boltzmann > 1e-250 && r.gamma_01 > 0.0 {
            worst = worst.max(rel(r.gamma_01 / r.gamma_10, boltzmann));
            checked += 1;
        }
    }
    // Freeze the rates of one point and integrate for 60 relaxation times.
    let model = NoiseModel::main_chip(15.5);
    let frozen = run.rates.iter().find(|r| r.gamma_10 > 1e-6).copied().expect("an active point");
    let span = 60.0 / frozen.total() / model.t_qa;
    let rates: Vec<RatePoint> = (0..=20)
        .map(|k| RatePoint {
            s: 0.3 + span * k as f64 / 20.0,
            relabeled: false,
            ..frozen
        })
        .collect();
    let trace = integrate_rates_from(&rates, &model, Some(0.5))?;
    let last = trace.rows.last().expect("rows");
    let drift = (last.z - last.z_eq).abs();
    Ok(Outcome::new(
        worst < 1e-10 && drift < 1e-10 && checked > 0,
        format!("ratio error {worst:.1e} over {checked} points; |z - z_eq| {drift:.1e}"),
    ))
}

fn svmc_estimate(ctx: &Ctx, h1: f64, temp_mk: f64, restarts: usize, seed: u64) -> Result<SuccessEstimate> {
    let problem = generate_problem(&ProblemKind::WeakStrongPair { h1 }, 0)?;
    let cfg = SvmcConfig {
        temp_mk,
        seed,
        ..SvmcConfig::default()
    };
    svmc_success(&problem, ctx.schedule(), &cfg, restarts)
}

fn strictly(xs: &[f64], increasing: bool) -> bool {
    xs.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Weighted least-squares slope of p against T and its standard error.
fn trend(temps: &[f64], est: &[SuccessEstimate]) -> (f64, f64) {
    let w: Vec<f64> = est
        .iter()
        .map(|e| e.trials as f64 / (e.p * (1.0 - e.p)).max(1e-6))
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = temps.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = est.iter().zip(&w).map(|(e, w)| e.p * w).sum::<f64>() / sw;
    let sxx: f64 = temps.iter().zip(&w).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = temps.iter().zip(est).zip(&w).map(|((x, e), w)| w * (x - mx) * (e.p - my)).sum();
    (sxy / sxx, sxx.recip().sqrt())
}

fn temperature_trends(ctx: &Ctx) -> Result<Outcome> {
    let mut mid = Vec::new();
    let mut hard = Vec::new();
    for &t in &TEMPS_MK {
        mid.push(ctx.niba(0.44, t)?.p_success);
        hard.push(ctx.niba(0.48, t)?.p_success);
    }
    let svmc: Vec<SuccessEstimate> = TEMPS_MK
        .iter()
        .enumerate()
        .map(|(k, &t)| svmc_estimate(ctx, 0.44, t, 1000, run_seed(60, k as u64)))
        .collect::<Result<_>>()?;
    let svmc_p: Vec<f64> = svmc.iter().map(|e| e.p).collect();
    let (slope, err) = trend(&TEMPS_MK, &svmc);
    let pass = strictly(&mid, false)
        && strictly(&hard, true)
        && hard.iter().all(|&p| p < 0.5)
        && strictly(&svmc_p, true)
        && slope - 1.96 * err > 0.0;
    Ok(Outcome::new(
        pass,
        format!(
            "NIBA 0.44 [{}]; NIBA 0.48 [{}]; SVMC 0.44 [{}], slope {:.4}/mK ± {:.4}",
            fmt_list(&mid, 3),
            fmt_list(&hard, 3),
            fmt_list(&svmc_p, 3),
            slope,
            err
        ),
    ))
}

fn p_vs_h1_shape(ctx: &Ctx) -> Result<Outcome> {
    let easy = [0.30, 0.32, 0.34, 0.36, 0.38];
    let easy_p: Vec<f64> = easy.iter().map(|&h| ctx.niba(h, 15.5).map(|r| r.p_success)).collect::<Result<_>>()?;
    let hard_p = ctx.niba(0.48, 15.5)?.p_success;
    let mid: Vec<f64> = (40..=47).map(|k| k as f64 / 100.0).collect();
    let mut below = true;
    let mut pairs = Vec::new();
    for (k, &h1) in mid.iter().enumerate() {
        let niba = ctx.niba(h1, 15.5)?.p_success;
        let svmc = svmc_estimate(ctx, h1, 15.5, 300, run_seed(70, k as u64))?.p;
        below &= svmc < niba;
        pairs.push(format!("{h1:.2}:{svmc:.2}<{niba:.2}"));
    }
    let pass = easy_p.iter().all(|&p| p >= 0.95) && hard_p <= 0.5 && below;
    Ok(Outcome::new(
        pass,
        format!(
            "NIBA h1<=0.38 [{}]; NIBA 0.48 {hard_p:.3}; SVMC<NIBA {}",
            fmt_list(&easy_p, 3),
            pairs.join(" ")
        ),
    ))
}

fn g1_small(ctx: &Ctx) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut missing = Vec::new();
    for h1 in [0.36, 0.38, 0.40, 0.42, 0.44, 0.46, 0.48] {
        for &t in &TEMPS_MK {
            let run = ctx.niba(h1, t)?;
            let at = run.rates.iter().find(|r| r.s >= run.s_therm);
            match at {
                Some(r) if !run.never_thermalized => worst = worst.max(r.g1),
                _ => missing.push(format!("({h1}, {t})")),
            }
        }
    }
    Ok(Outcome::new(
        worst < 0.1 && missing.is_empty(),
        format!("largest g1 {worst:.2e} over 42 runs; never thermalized: {}", missing.len()),
    ))
}

fn kramer_barriers(ctx: &Ctx) -> Result<Outcome> {
    let spec = WeakStrongSpec::with_h1(0.44);
    let mut within = 0;
    let mut errs = Vec::new();
    for s in [0.217, 0.233, 0.249, 0.265] {
        let cfg = KramerConfig {
            s,
            seed: 9,
            ..KramerConfig::default()
        };
        let fit = kramer_fit(&spec, ctx.schedule(), &cfg)?;
        let e = fit.delta_u_ghz / fit.barrier_ghz - 1.0;
        if e.abs() <= 0.15 {
            within += 1;
        }
        errs.push(100.0 * e);
    }
    Ok(Outcome::new(within >= 4, format!("relative errors [{}] %", fmt_list(&errs, 1))))
}

fn glass_scaling(_: &Ctx) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::new(Experiment::Glass(GlassParams {
        rows: vec![1, 2, 3],
        instances: 20,
        restarts: 25,
        ..GlassParams::default()
    }));
    cfg.seed = 10;
    let out = std::env::temp_dir().join("qa-lab-acceptance-glass");
    let report = run_experiment(&cfg, &out, None)?;
    let fit = &report.summary["result"]["fit"];
    let alpha = fit["alpha"].as_f64().unwrap_or(f64::NAN);
    let err = fit["alpha_err"].as_f64().unwrap_or(f64::NAN);
    Ok(Outcome::new(
        (alpha - 0.028).abs() <= 0.015,
        format!("alpha {alpha:.4} ± {err:.4} (smoke: 20 instances, 40/80/120 qubits)"),
    ))
}

fn lamb_shift(_: &Ctx) -> Result<Outcome> {
    let params = LambParams::default();
    let ratio = params.noise.omega_c / params.noise.kt_ghz();
    let out = std::env::temp_dir().join("qa-lab-acceptance-lamb");
    let report = run_experiment(&ExperimentConfig::new(Experiment::Lamb(params)), &out, None)?;
    let result = &report.summary["result"];
    let worst = result["max_relative_difference"].as_f64().unwrap_or(f64::NAN);
    let nu_max = result["validity_window"]["nu_max"].as_f64().unwrap_or(f64::NAN);
    let nu_min = result["validity_window"]["nu_min"].as_f64().unwrap_or(f64::NAN);
    let pass = ratio >= 1e3 && worst < 0.1 && rel(nu_max, 15.0) <= 0.25 && (0.5e-3..=2e-3).contains(&nu_min);
    Ok(Outcome::new(
        pass,
        format!(
            "cutoff/T {ratio:.0}, worst {:.2}%, window {:.2} MHz to {nu_max:.1} GHz",
            100.0 * worst,
            1e3 * nu_min
        ),
    ))
}

fn unit_sanity(_: &Ctx) -> Result<Outcome> {
    let kt = thermal_ghz(15.5);
    let pair = generate_problem(&ProblemKind::WeakStrongPair { h1: 0.44 }, 0)?;
    let identity = chi_correct(&pair, 0.0)? == pair;
    let spec = WeakStrongSpec::with_h1(0.44);
    // Lowest two cluster-aligned energies: true and false minima.
    let mut energies: Vec<f64> = (0..1u32 << pair.clusters.len())
        .map(|mask| {
            let mut spins = vec![0i8; pair.num_spins()];
            for (c, members) in pair.clusters.iter().enumerate() {
                let s = if mask >> c & 1 == 1 { -1 } else { 1 };
                members.iter().for_each(|&m| spins[m] = s);
            }
            pair.energy(&spins)
        })
        .collect();
    energies.sort_by(f64::total_cmp);
    let gap = energies[1] - energies[0];
    let pass = (kt - 0.323).abs() <= 0.001 && identity && (gap - spec.classical_gap()).abs() < 1e-12;
    Ok(Outcome::new(
        pass,
        format!(
            "15.5 mK = {kt:.4} GHz; chi 0 identity {identity}; false-true {gap:.6} vs {:.6}",
            spec.classical_gap()
        ),
    ))
}

type Check = fn(&Ctx) -> Result<Outcome>;

const CRITERIA: [(&str, Check); 12] = [
    ("subspace matches exact spectrum", subspace_vs_exact),
    ("minimum gaps", minimum_gap),
    ("instanton gap table", instanton_table),
    ("NIBA reproduces the Gaussian line", niba_oracle),
    ("detailed balance and stationarity", balance_and_stationarity),
    ("temperature trends", temperature_trends),
    ("success versus h1 shape", p_vs_h1_shape),
    ("NIBA validity g1 < 0.1", g1_small),
    ("Kramer fit matches barrier", kramer_barriers),
    ("glass scaling exponent", glass_scaling),
    ("Lamb shift and validity window", lamb_shift),
    ("unit sanity", unit_sanity),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ctx = Ctx::default();
    let mut unexpected = 0;
    for (k, (name, check)) in CRITERIA.iter().enumerate() {
        let id = k + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check(&ctx).unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let known = KNOWN_FAILURES.contains(&id);
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        let note = if known { " (known failure)" } else { "" };
        println!(
            "{tag} criterion {id:>2} {name}{note}: {} [{:.1} s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if outcome.pass == known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria did not match their expected outcome");
        ExitCode::FAILURE
    }
}
