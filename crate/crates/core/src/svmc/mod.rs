//! Spin-vector Monte Carlo: each qubit is a planar rotor at angle θ from the
//! x-axis, with ⟨σˣ⟩ = cos θ and ⟨σᶻ⟩ = sin θ, updated by single-spin
//! Metropolis moves while A(s) and B(s) follow the anneal.

mod analysis;
mod problem;

pub use analysis::{arrhenius_temperatures, escape_barrier, kramer_fit, EscapeBarrier, scaling_fit, wilson_interval, KramerConfig, KramerFit, KramerPoint, ScalingFit, SizeResults};
pub use problem::{chi_correct, generate_problem, GroundState, IsingProblem, ProblemKind};

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::schedule::AnnealSchedule;
use crate::units::thermal_ghz;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmcConfig {
    pub sweeps: usize,
    pub temp_mk: f64,
    /// Background-susceptibility correction applied before annealing.
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SvmcConfig {
    fn default() -> Self {
        Self {
            sweeps: 128_000,
            temp_mk: 15.0,
            chi: 0.0,
            seed: 0,
        }
    }
}

impl SvmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(invalid("sweeps must be at least 1"));
        }
        if !(self.temp_mk > 0.0) {
            return Err(invalid("temperature must be positive"));
        }
        if !(self.chi >= 0.0) {
            return Err(invalid("chi must be non-negative"));
        }
        Ok(())
    }
}

/// Rotor state with cached sines and cosines and the two energy components
/// `X = Σ cos θ` and `Z = Σ hᵢ sin θᵢ + Σ Jᵢⱼ sin θᵢ sin θⱼ`, so that
/// `E = −A X − B Z` at any (A, B).
#[derive(Debug, Clone)]
pub struct RotorState {
    sin: Vec<f64>,
    cos: Vec<f64>,
    x_sum: f64,
    z_sum: f64,
}

/// Compressed neighbour lists.
#[derive(Debug, Clone)]
pub struct Graph {
    h: Vec<f64>,
    start: Vec<usize>,
    nbr: Vec<usize>,
    weight: Vec<f64>,
}

impl Graph {
    pub fn new(problem: &IsingProblem) -> Self {
        let adj = problem.adjacency();
        let mut start = Vec::with_capacity(adj.len() + 1);
        let (mut nbr, mut weight) = (Vec::new(), Vec::new());
        start.push(0);
        for list in &adj {
            for &(j, v) in list {
                nbr.push(j);
                weight.push(v);
            }
            start.push(nbr.len());
        }
        Self {
            h: problem.h.clone(),
            start,
            nbr,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    #[inline]
    fn local_field(&self, i: usize, sin: &[f64]) -> f64 {
        let mut f = self.h[i];
        for k in self.start[i]..self.start[i + 1] {
            f += self.weight[k] * sin[self.nbr[k]];
        }
        f
    }
}

impl RotorState {
    pub fn new(graph: &Graph, theta: Vec<f64>) -> Self {
        let (sin, cos): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| t.sin_cos()).unzip();
        let mut st = Self {
            sin,
            cos,
            x_sum: 0.0,
            z_sum: 0.0,
        };
        st.recompute(graph);
        st
    }

    /// All rotors along +x.
    pub fn along_x(graph: &Graph) -> Self {
        Self::new(graph, vec![0.0; graph.len()])
    }

    fn recompute(&mut self, graph: &Graph) {
        self.x_sum = self.cos.iter().sum();
        let mut z = 0.0;
        for i in 0..graph.len() {
            let mut pair = 0.0;
            for k in graph.start[i]..graph.start[i + 1] {
                let j = graph.nbr[k];
                if j > i {
                    pair += graph.weight[k] * self.sin[j];
                }
            }
            z += self.sin[i] * (graph.h[i] + pair);
        }
        self.z_sum = z;
    }

    /// Energy from the running sums.
    pub fn energy(&self, a: f64, b: f64) -> f64 {
        -a * self.x_sum - b * self.z_sum
    }

    /// Energy recomputed from scratch.
    pub fn energy_exact(&self, graph: &Graph, a: f64, b: f64) -> f64 {
        let mut fresh = self.clone();
        fresh.recompute(graph);
        fresh.energy(a, b)
    }

    /// Angles in (−π, π].
    pub fn theta(&self) -> Vec<f64> {
        self.sin.iter().zip(&self.cos).map(|(s, c)| s.atan2(*c)).collect()
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    /// Signs of sin θ, with +1 for zero.
    pub fn spins(&self) -> Vec<i8> {
        self.sin.iter().map(|&s| if s < 0.0 { -1 } else { 1 }).collect()
    }

    /// One Metropolis sweep in spin order; returns the number of accepted
    /// moves. `kt` is k_BT in GHz, `a` and `b` in GHz.
    pub fn sweep<R: Rng>(&mut self, graph: &Graph, a: f64, b: f64, kt: f64, rng: &mut R) -> usize {
        let mut accepted = 0;
        for i in 0..graph.len() {
            let (s_new, c_new) = uniform_direction(rng);
            let field = graph.local_field(i, &self.sin);
            let ds = s_new - self.sin[i];
            let dc = c_new - self.cos[i];
            let delta = -a * dc - b * field * ds;
            if delta <= 0.0 || rng.random::<f64>() < (-delta / kt).exp() {
                self.sin[i] = s_new;
                self.cos[i] = c_new;
                self.x_sum += dc;
                self.z_sum += field * ds;
                accepted += 1;
            }
        }
        accepted
    }
}

/// A uniformly random unit vector (sin θ, cos θ), by rejection from the
/// square.
#[inline]
fn uniform_direction<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let x = 2.0 * rng.random::<f64>() - 1.0;
        let y = 2.0 * rng.random::<f64>() - 1.0;
        let r2 = x * x + y * y;
        if r2 <= 1.0 && r2 > 1e-12 {
            let inv = r2.sqrt().recip();
            return (y * inv, x * inv);
        }
    }
}

/// Seed of run `index` under `base`: the SplitMix64 sequence started at
/// `base`, so neighbouring bases and indices give unrelated streams.
pub fn run_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome {
    /// Seed of this run's generator.
    pub seed: u64,
    pub final_angles: Vec<f64>,
    pub final_spins: Vec<i8>,
    /// Ising energy of `final_spins`.
    pub energy: f64,
    pub success: bool,
}

/// Prepare the problem the rotors actually see.
fn effective_problem(problem: &IsingProblem, cfg: &SvmcConfig) -> Result<IsingProblem> {
    cfg.validate()?;
    problem.validate()?;
    chi_correct(problem, cfg.chi)
}

fn anneal_once(graph: &Graph, problem: &IsingProblem, schedule: &AnnealSchedule, cfg: &SvmcConfig, seed: u64) -> Result<AnnealOutcome> {
    let ground = problem.known_ground.as_ref().ok_or(Error::MissingGround)?;
    let kt = thermal_ghz(cfg.temp_mk);
    let mut rng = run_rng(seed);
    let mut state = RotorState::along_x(graph);
    for k in 0..cfg.sweeps {
        let s = (k + 1) as f64 / cfg.sweeps as f64;
        let (a, b) = schedule.ab_at(s);
        state.sweep(graph, a, b, kt, &mut rng);
    }
    let final_spins = state.spins();
    let energy = problem.energy(&final_spins);
    Ok(AnnealOutcome {
        seed,
        success: energy <= ground.energy + 1e-9,
        final_angles: state.theta(),
        final_spins,
        energy,
    })
}

/// One anneal from all rotors along x, seeded with `cfg.seed`. Success
/// means reaching the ground-state energy of `problem.known_ground`.
pub fn svmc_anneal(problem: &IsingProblem, schedule: &AnnealSchedule, cfg: &SvmcConfig) -> Result<AnnealOutcome> {
    let eff = effective_problem(problem, cfg)?;
    anneal_once(&Graph::new(&eff), problem, schedule, cfg, cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub successes: usize,
    pub trials: usize,
    pub p: f64,
    /// 95 % Wilson interval.
    pub lo: f64,
    pub hi: f64,
}

impl SuccessEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        let (lo, hi) = wilson_interval(successes, trials, 1.96);
        Self {
            successes,
            trials,
            p: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            lo,
            hi,
        }
    }
}

/// Independent restarts in parallel; restart `r` is seeded with
/// `run_seed(cfg.seed, r)`.
pub fn svmc_restarts(problem: &IsingProblem, schedule: &AnnealSchedule, cfg: &SvmcConfig, restarts: usize) -> Result<Vec<AnnealOutcome>> {
    let eff = effective_problem(problem, cfg)?;
    let graph = Graph::new(&eff);
    (0..restarts as u64)
        .into_par_iter()
        .map(|r| anneal_once(&graph, problem, schedule, cfg, run_seed(cfg.seed, r)))
        .collect()
}

pub fn svmc_success(problem: &IsingProblem, schedule: &AnnealSchedule, cfg: &SvmcConfig, restarts: usize) -> Result<SuccessEstimate> {
    let runs = svmc_restarts(problem, schedule, cfg, restarts)?;
    Ok(SuccessEstimate::from_counts(runs.iter().filter(|r| r.success).count(), runs.len()))
}

/// One row of the results CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: usize,
    pub seed: u64,
    pub success: bool,
    pub energy: f64,
}

pub fn write_results_csv<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["instance", "seed", "success", "energy"])?;
    for r in records {
        wr.write_record([
            r.instance.to_string(),
            r.seed.to_string(),
            u8::from(r.success).to_string(),
            crate::schedule::fmt_sig(r.energy),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Mean z-magnetization of each cluster.
pub fn cluster_magnetizations(state: &RotorState, clusters: &[Vec<usize>]) -> Vec<f64> {
    clusters
        .iter()
        .map(|c| c.iter().map(|&i| state.sin[i]).sum::<f64>() / c.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::Potential;
    use crate::spin_model::WeakStrongSpec;

    fn pair(h1: f64) -> IsingProblem {
        generate_problem(&ProblemKind::WeakStrongPair { h1 }, 0).unwrap()
    }

    #[test]
    fn aligned_clusters_reproduce_potential() {
        let p = pair(0.44);
        let g = Graph::new(&p);
        for &(q1, q2) in &[(0.3, -0.8), (-0.99, 0.1), (0.0, 0.0)] {
            let theta: Vec<f64> = (0..16).map(|i| f64::asin(if i < 8 { q1 } else { q2 })).collect();
            let st = RotorState::new(&g, theta);
            let pot = Potential {
                spec: WeakStrongSpec::with_h1(0.44),
                a_ghz: 0.7,
                b_ghz: 1.3,
            };
            assert!((st.energy(0.7, 1.3) - pot.value(q1, q2)).abs() < 1e-12);
        }
    }

    #[test]
    fn incremental_energy_matches_recomputation() {
        let p = generate_problem(&ProblemKind::Glass { rows: 1, h1: 0.4 }, 3).unwrap();
        let g = Graph::new(&p);
        let mut rng = run_rng(1);
        let mut st = RotorState::along_x(&g);
        for k in 0..3000 {
            st.sweep(&g, 0.8, 1.1, 0.5, &mut rng);
            if k % 1000 == 999 {
                assert!((st.energy(0.8, 1.1) - st.energy_exact(&g, 0.8, 1.1)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_temperature_classical_sweeps_never_raise_energy() {
        let p = pair(0.44);
        let g = Graph::new(&p);
        let mut rng = run_rng(5);
        let mut st = RotorState::along_x(&g);
        let mut e = st.energy(0.0, 1.0);
        for _ in 0..200 {
            st.sweep(&g, 0.0, 1.0, 1e-300, &mut rng);
            let next = st.energy(0.0, 1.0);
            assert!(next <= e + 1e-12);
            e = next;
        }
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let p = pair(0.44);
        let sched = AnnealSchedule::linear(5.0, 5.0, 11).unwrap();
        let cfg = SvmcConfig {
            sweeps: 300,
            seed: 11,
            ..SvmcConfig::default()
        };
        let a = svmc_restarts(&p, &sched, &cfg, 4).unwrap();
        let b = svmc_restarts(&p, &sched, &cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].final_angles, a[1].final_angles);
    }

    #[test]
    fn missing_ground_is_an_error() {
        let mut p = pair(0.44);
        p.known_ground = None;
        let sched = AnnealSchedule::linear(5.0, 5.0, 11).unwrap();
        let cfg = SvmcConfig {
            sweeps: 10,
            ..SvmcConfig::default()
        };
        assert!(matches!(svmc_anneal(&p, &sched, &cfg), Err(Error::MissingGround)));
    }

    #[test]
    fn free_rotor_samples_boltzmann() {
        // A single spin in a field: histogram of θ against e^{−E(θ)/kT}.
        let p = IsingProblem::new(vec![0.5], vec![]).unwrap();
        let g = Graph::new(&p);
        let (a, b, kt) = (0.4, 1.0, 0.6);
        let energy = |t: f64| -a * t.cos() - b * 0.5 * t.sin();
        let bins = 50;
        let mut counts = vec![0usize; bins];
        let mut rng = run_rng(2);
        let mut st = RotorState::along_x(&g);
        let samples = 1_000_000;
        for _ in 0..samples {
            st.sweep(&g, a, b, kt, &mut rng);
            let t = st.theta()[0].rem_euclid(std::f64::consts::TAU);
            counts[((t / std::f64::consts::TAU) * bins as f64) as usize % bins] += 1;
        }
        let width = std::f64::consts::TAU / bins as f64;
        let weights: Vec<f64> = (0..bins)
            .map(|k| {
                // Midpoint rule on 20 sub-points per bin.
                (0..20)
                    .map(|m| (-energy(width * (k as f64 + (m as f64 + 0.5) / 20.0)) / kt).exp())
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let chi2: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&c, w)| {
                let e = samples as f64 * w / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 49 degrees of freedom: the 99th percentile is about 74.9. Samples
        // are correlated through rejections, so allow the variance inflation
        // of a lazy chain (about 1/acceptance).
        assert!(chi2 < 74.9 * 2.0, "chi2 = {chi2}");
    }

    #[test]
    fn wilson_brackets_estimate() {
        let e = SuccessEstimate::from_counts(30, 100);
        assert!(e.lo < 0.3 && e.hi > 0.3);
    }
}
