//! Fits on top of the rotor engine: thermally activated escape from the
//! false minimum, and exponential decay of success with problem size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_problem, run_rng, run_seed, Graph, ProblemKind, RotorState};
use crate::error::{invalid, Error, Result};
use crate::schedule::AnnealSchedule;
use crate::semiclassical::{barrier_between, find_minima, Potential};
use crate::spin_model::WeakStrongSpec;
use crate::units::{temp_mk_from_ghz, thermal_ghz};

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KramerConfig {
    pub s: f64,
    /// Explicit temperatures; when empty they follow from `barrier_ratios`.
    #[serde(default)]
    pub temps_mk: Vec<f64>,
    /// Barrier-to-k_BT ratios used to place the temperatures.
    #[serde(default = "default_ratios")]
    pub barrier_ratios: Vec<f64>,
    /// Escape runs per temperature.
    pub restarts: usize,
    /// Sweep cap per run; runs that hit it are censored.
    pub max_sweeps: usize,
    /// Neighbourhood radius around the target minimum, in q.
    pub radius: f64,
    pub seed: u64,
}

impl Default for KramerConfig {
    fn default() -> Self {
        Self {
            s: 0.241,
            temps_mk: Vec::new(),
            barrier_ratios: default_ratios(),
            restarts: 100,
            max_sweeps: 2_000_000,
            radius: 0.1,
            seed: 0,
        }
    }
}

fn default_ratios() -> Vec<f64> {
    vec![4.5, 5.5, 6.5, 7.5, 8.5]
}

/// Temperatures (mK) at which `barrier_ghz / k_BT` takes each ratio.
pub fn arrhenius_temperatures(barrier_ghz: f64, ratios: &[f64]) -> Vec<f64> {
    ratios.iter().map(|r| temp_mk_from_ghz(barrier_ghz / r)).collect()
}

/// Barrier between the two lowest minima of the pair at `s`, seen from the
/// higher one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeBarrier {
    pub s: f64,
    pub barrier_ghz: f64,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

pub fn escape_barrier(spec: &WeakStrongSpec, schedule: &AnnealSchedule, s: f64) -> Result<EscapeBarrier> {
    let pot = Potential::new(spec, schedule, s);
    let mut minima = find_minima(&pot);
    if minima.len() < 2 {
        return Err(Error::SingleWell { s });
    }
    minima.sort_by(|a, b| a.u.total_cmp(&b.u));
    let (to, from) = (minima[0], minima[1]);
    Ok(EscapeBarrier {
        s,
        barrier_ghz: barrier_between(&pot, from.q1, to.q1) - from.u,
        from: (from.q1, from.q2),
        to: (to.q1, to.q2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KramerPoint {
    pub temp_mk: f64,
    pub mean_sweeps: f64,
    /// Runs that reached the target before the cap.
    pub escaped: usize,
    pub runs: usize,
    /// Left out of the fit because some run hit the sweep cap.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KramerFit {
    pub s: f64,
    /// Slope of ln(mean sweeps) against 1/k_BT, in GHz.
    pub delta_u_ghz: f64,
    /// Barrier of the product-state potential at the same s.
    pub barrier_ghz: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<KramerPoint>,
    pub false_minimum: (f64, f64),
    pub true_minimum: (f64, f64),
}

/// Ordinary least squares `y = a + b x`; returns (a, b, R²).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (a, b, r2)
}

fn cluster_means(state: &RotorState) -> (f64, f64) {
    let s = state.sin();
    let half = s.len() / 2;
    let q1 = s[..half].iter().sum::<f64>() / half as f64;
    let q2 = s[half..].iter().sum::<f64>() / half as f64;
    (q1, q2)
}

/// Sweeps until the pair first enters the target neighbourhood, or `None`
/// at the cap.
fn first_passage(
    graph: &Graph,
    start: (f64, f64),
    target: (f64, f64),
    ab: (f64, f64),
    kt: f64,
    cfg: &KramerConfig,
    stream: u64,
) -> Option<usize> {
    let half = graph.len() / 2;
    let theta: Vec<f64> = (0..graph.len())
        .map(|i| if i < half { start.0.asin() } else { start.1.asin() })
        .collect();
    let mut state = RotorState::new(graph, theta);
    let mut rng = run_rng(run_seed(cfg.seed, stream));
    for k in 1..=cfg.max_sweeps {
        state.sweep(graph, ab.0, ab.1, kt, &mut rng);
        let (q1, q2) = cluster_means(&state);
        if (q1 - target.0).abs() < cfg.radius && (q2 - target.1).abs() < cfg.radius {
            return Some(k);
        }
    }
    None
}

/// Escape times from the false to the true minimum of the weak-strong pair
/// at fixed s, fitted to an Arrhenius law.
pub fn kramer_fit(spec: &WeakStrongSpec, schedule: &AnnealSchedule, cfg: &KramerConfig) -> Result<KramerFit> {
    spec.validate()?;
    if spec.n != 8 {
        return Err(invalid("escape runs use 8-qubit cells"));
    }
    if cfg.restarts == 0 || cfg.max_sweeps == 0 {
        return Err(invalid("restarts and max_sweeps must be positive"));
    }
    let count = if cfg.temps_mk.is_empty() { cfg.barrier_ratios.len() } else { cfg.temps_mk.len() };
    if count < 4 {
        return Err(invalid("need at least four temperatures"));
    }
    let barrier = escape_barrier(spec, schedule, cfg.s)?;
    let temps = if cfg.temps_mk.is_empty() {
        arrhenius_temperatures(barrier.barrier_ghz, &cfg.barrier_ratios)
    } else {
        cfg.temps_mk.clone()
    };
    if temps.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("temperatures must be positive"));
    }
    let (falsem, truth) = (barrier.from, barrier.to);

    let mut problem = generate_problem(&ProblemKind::WeakStrongPair { h1: spec.h1 }, 0)?;
    problem.known_ground = None;
    let graph = Graph::new(&problem);
    let ab = schedule.ab_at(cfg.s);

    let points: Vec<KramerPoint> = temps
        .par_iter()
        .enumerate()
        .map(|(t_idx, &temp)| {
            let kt = thermal_ghz(temp);
            let times: Vec<Option<usize>> = (0..cfg.restarts)
                .into_par_iter()
                .map(|r| first_passage(&graph, falsem, truth, ab, kt, cfg, (t_idx * cfg.restarts + r) as u64))
                .collect();
            let hits: Vec<usize> = times.iter().flatten().copied().collect();
            let escaped = hits.len();
            KramerPoint {
                temp_mk: temp,
                mean_sweeps: if escaped == 0 { f64::NAN } else { hits.iter().sum::<usize>() as f64 / escaped as f64 },
                escaped,
                runs: cfg.restarts,
                dropped: escaped < cfg.restarts,
            }
        })
        .collect();

    let kept: Vec<&KramerPoint> = points.iter().filter(|p| !p.dropped).collect();
    if kept.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} temperatures escaped within {} sweeps",
            kept.len(),
            cfg.max_sweeps
        )));
    }
    let x: Vec<f64> = kept.iter().map(|p| 1.0 / thermal_ghz(p.temp_mk)).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.mean_sweeps.ln()).collect();
    let (intercept, slope, r_squared) = linear_fit(&x, &y);
    Ok(KramerFit {
        s: cfg.s,
        delta_u_ghz: slope,
        barrier_ghz: barrier.barrier_ghz,
        intercept,
        r_squared,
        points,
        false_minimum: falsem,
        true_minimum: truth,
    })
}

/// Per-instance success probabilities at one problem size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeResults {
    pub qubits: usize,
    pub success: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Decay exponent in `p ∝ exp(−α n_q)`.
    pub alpha: f64,
    /// Bootstrap standard error of `alpha`.
    pub alpha_err: f64,
    pub intercept: f64,
    /// Sizes left out because no instance ever succeeded.
    pub excluded: Vec<usize>,
    pub resamples: usize,
}

/// Fit ln(mean success) against qubit count, with a bootstrap over
/// instances within each size.
pub fn scaling_fit(results: &[SizeResults], resamples: usize, seed: u64) -> Result<ScalingFit> {
    let mut excluded = Vec::new();
    let kept: Vec<&SizeResults> = results
        .iter()
        .filter(|r| {
            let zero = r.success.iter().all(|&p| p == 0.0);
            if zero {
                excluded.push(r.qubits);
            }
            !zero && !r.success.is_empty()
        })
        .collect();
    if kept.len() < 3 {
        return Err(Error::Fit(format!("need three sizes with successes, have {}", kept.len())));
    }
    if kept.iter().any(|r| r.success.iter().any(|p| !(0.0..=1.0).contains(p))) {
        return Err(invalid("success probabilities must lie in [0, 1]"));
    }
    let x: Vec<f64> = kept.iter().map(|r| r.qubits as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let y: Vec<f64> = kept.iter().map(|r| mean(&r.success).ln()).collect();
    let (intercept, slope, _) = linear_fit(&x, &y);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    let mut scratch = Vec::new();
    for _ in 0..resamples {
        let mut yb = Vec::with_capacity(kept.len());
        for r in &kept {
            scratch.clear();
            scratch.extend((0..r.success.len()).map(|_| r.success[rng.random_range(0..r.success.len())]));
            yb.push(mean(&scratch).ln());
        }
        // A resample with no successes at some size has no finite fit.
        if yb.iter().all(|v| v.is_finite()) {
            slopes.push(linear_fit(&x, &yb).1);
        }
    }
    let alpha_err = if slopes.len() > 1 {
        let m = mean(&slopes);
        (slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ScalingFit {
        alpha: -slope,
        alpha_err,
        intercept,
        excluded,
        resamples: slopes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Uniform};

    #[test]
    fn wilson_known_value() {
        // 0 of 10 at z = 1.96: upper bound z²/(n + z²).
        let (lo, hi) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
        assert!((hi - 1.96f64.powi(2) / (10.0 + 1.96f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn exact_exponential_recovers_alpha() {
        let results: Vec<SizeResults> = [40, 80, 120, 160, 200]
            .iter()
            .map(|&n| SizeResults {
                qubits: n,
                success: vec![(-0.01 * n as f64).exp(); 20],
            })
            .collect();
        let fit = scaling_fit(&results, 1000, 1).unwrap();
        assert!((fit.alpha - 0.01).abs() < 1e-12);
        assert!(fit.alpha_err < 1e-12);
    }

    #[test]
    fn zero_sizes_are_excluded() {
        let mut results: Vec<SizeResults> = [40, 80, 120]
            .iter()
            .map(|&n| SizeResults {
                qubits: n,
                success: vec![(-0.02 * n as f64).exp(); 5],
            })
            .collect();
        results.push(SizeResults {
            qubits: 160,
            success: vec![0.0; 5],
        });
        let fit = scaling_fit(&results, 100, 1).unwrap();
        assert_eq!(fit.excluded, vec![160]);
        assert!((fit.alpha - 0.02).abs() < 1e-12);
        results.truncate(2);
        assert!(scaling_fit(&results, 100, 1).is_err());
    }

    #[test]
    fn bootstrap_error_shrinks_with_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Uniform::new(0.5, 1.5).unwrap();
        let mut make = |count: usize| -> Vec<SizeResults> {
            [40, 80, 120, 160]
                .iter()
                .map(|&n| SizeResults {
                    qubits: n,
                    success: (0..count).map(|_| (-0.02 * n as f64).exp() * noise.sample(&mut rng)).map(|p: f64| p.min(1.0)).collect(),
                })
                .collect()
        };
        let small = scaling_fit(&make(25), 1000, 5).unwrap().alpha_err;
        let large = scaling_fit(&make(400), 1000, 5).unwrap().alpha_err;
        // Sixteen times the instances: about a quarter of the error.
        let ratio = small / large;
        assert!(ratio > 2.5 && ratio < 6.0, "ratio {ratio}");
    }

    #[test]
    fn linear_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, r2) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kramer_needs_four_temperatures() {
        let sched = AnnealSchedule::linear(5.0, 5.0, 11).unwrap();
        let cfg = KramerConfig {
            temps_mk: vec![50.0, 60.0, 70.0],
            ..KramerConfig::default()
        };
        let err = kramer_fit(&WeakStrongSpec::default(), &sched, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
        let cfg = KramerConfig {
            barrier_ratios: vec![4.0, 5.0, 6.0],
            ..KramerConfig::default()
        };
        let err = kramer_fit(&WeakStrongSpec::default(), &sched, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
    }
}
