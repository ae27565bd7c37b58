//! Batch runs driven by a versioned JSON config. Each run writes CSV tables,
//! `summary.json` and `manifest.json` into one output directory.
//!
//! ```json
//! {
//!   "version": 1,
//!   "seed": 7,
//!   "schedule": { "source": "flux_qubit", "points": 101 },
//!   "experiment": { "name": "p-vs-t", "params": { "h1": 0.44 } }
//! }
//! ```
//!
//! Every params block has defaults for all of its fields, so `"params": {}`
//! runs the reference setting. Unknown keys anywhere are rejected.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::niba::{
    averaged_success, evolve_populations, rate_points, anneal_grid, write_rates_csv, write_trace_csv, ControlNoise,
    EvolutionSummary, RateMethod,
};
use crate::noise::{lamb_shift, validity_window, NoiseModel};
use crate::schedule::{build_schedule, fmt_sig, AnnealSchedule, FluxQubitParams};
use crate::semiclassical::{instanton_gap, track_minima, write_potential_csv, AttemptRate, Potential};
use crate::spectral::{min_gap, scan, slice_at, write_slice_csv};
use crate::spin_model::{build_subspace_hamiltonian, write_operator_dump, WeakStrongSpec};
use crate::svmc::{
    generate_problem, kramer_fit, run_seed, scaling_fit, svmc_restarts, write_results_csv, IsingProblem,
    KramerConfig, ProblemKind, RunRecord, SizeResults, SuccessEstimate, SvmcConfig,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: ScheduleSource,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSource {
    FluxQubit {
        points: usize,
        #[serde(default)]
        params: FluxQubitParams,
    },
    /// A table written by the `schedule` experiment.
    Csv { path: PathBuf },
    /// A(s) = a0(1 − s), B(s) = b1 s.
    Linear { a0: f64, b1: f64, points: usize },
}

impl Default for ScheduleSource {
    fn default() -> Self {
        ScheduleSource::FluxQubit {
            points: 101,
            params: FluxQubitParams::default(),
        }
    }
}

impl ScheduleSource {
    pub fn load(&self) -> Result<AnnealSchedule> {
        match self {
            ScheduleSource::FluxQubit { points, params } => build_schedule(params, *points),
            ScheduleSource::Csv { path } => {
                let f = File::open(path).map_err(|e| Error::from(e).context(format!("reading schedule {}", path.display())))?;
                AnnealSchedule::read_csv(BufReader::new(f))
            }
            ScheduleSource::Linear { a0, b1, points } => AnnealSchedule::linear(*a0, *b1, *points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    Schedule(ScheduleParams),
    Spectrum(SpectrumParams),
    Rates(RatesParams),
    Evolve(EvolveParams),
    PVsH1(PVsH1Params),
    PVsT(PVsTParams),
    Svmc(SvmcParams),
    Kramer(KramerParams),
    Instanton(InstantonParams),
    Glass(GlassParams),
    Lamb(LambParams),
}

/// Names accepted in `experiment.name`, in CLI order.
pub const EXPERIMENT_NAMES: [&str; 11] = [
    "schedule",
    "spectrum",
    "rates",
    "evolve",
    "p-vs-h1",
    "p-vs-t",
    "svmc",
    "kramer",
    "instanton",
    "glass",
    "lamb",
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Schedule(_) => "schedule",
            Experiment::Spectrum(_) => "spectrum",
            Experiment::Rates(_) => "rates",
            Experiment::Evolve(_) => "evolve",
            Experiment::PVsH1(_) => "p-vs-h1",
            Experiment::PVsT(_) => "p-vs-t",
            Experiment::Svmc(_) => "svmc",
            Experiment::Kramer(_) => "kramer",
            Experiment::Instanton(_) => "instanton",
            Experiment::Glass(_) => "glass",
            Experiment::Lamb(_) => "lamb",
        }
    }

    /// The reference setting of experiment `name`.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "schedule" => Experiment::Schedule(ScheduleParams::default()),
            "spectrum" => Experiment::Spectrum(SpectrumParams::default()),
            "rates" => Experiment::Rates(RatesParams::default()),
            "evolve" => Experiment::Evolve(EvolveParams::default()),
            "p-vs-h1" => Experiment::PVsH1(PVsH1Params::default()),
            "p-vs-t" => Experiment::PVsT(PVsTParams::default()),
            "svmc" => Experiment::Svmc(SvmcParams::default()),
            "kramer" => Experiment::Kramer(KramerParams::default()),
            "instanton" => Experiment::Instanton(InstantonParams::default()),
            "glass" => Experiment::Glass(GlassParams::default()),
            "lamb" => Experiment::Lamb(LambParams::default()),
            other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleParams {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub spec: WeakStrongSpec,
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    /// Include ε_p of this bath in Ω.
    pub noise: Option<NoiseModel>,
    /// Window searched for the minimum gap.
    pub gap_window: Option<[f64; 2]>,
    /// Also dump the subspace Hamiltonian at this s as `operator.txt`.
    pub dump_operator_at: Option<f64>,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            spec: WeakStrongSpec::default(),
            s_min: 0.0,
            s_max: 1.0,
            points: 101,
            noise: None,
            gap_window: Some([0.2, 0.4]),
            dump_operator_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesParams {
    pub spec: WeakStrongSpec,
    pub noise: NoiseModel,
    pub methods: Vec<RateMethod>,
    pub s_start: f64,
    pub steps: usize,
}

impl Default for RatesParams {
    fn default() -> Self {
        Self {
            spec: WeakStrongSpec::default(),
            noise: NoiseModel::default(),
            methods: vec![RateMethod::Niba, RateMethod::Fgr],
            s_start: 0.12,
            steps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub spec: WeakStrongSpec,
    pub noise: NoiseModel,
    pub method: RateMethod,
    pub s_start: f64,
    pub steps: usize,
    /// Also average p_success over perturbed copies of the problem.
    pub control_noise: Option<ControlNoise>,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            spec: WeakStrongSpec::default(),
            noise: NoiseModel::default(),
            method: RateMethod::Niba,
            s_start: 0.12,
            steps: 200,
            control_noise: None,
        }
    }
}

/// Methods compared in the success-probability sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Niba,
    Fgr,
    Svmc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Niba => "niba",
            Method::Fgr => "fgr",
            Method::Svmc => "svmc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmcRun {
    pub sweeps: usize,
    pub restarts: usize,
    pub chi: f64,
}

impl Default for SvmcRun {
    fn default() -> Self {
        Self {
            sweeps: 128_000,
            restarts: 1000,
            chi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PVsH1Params {
    pub h1_values: Vec<f64>,
    /// Bath; its temperature applies to every method.
    pub noise: NoiseModel,
    pub methods: Vec<Method>,
    pub s_start: f64,
    pub steps: usize,
    pub svmc: SvmcRun,
}

impl Default for PVsH1Params {
    fn default() -> Self {
        Self {
            h1_values: (0..=18).map(|k| 0.30 + 0.01 * k as f64).collect(),
            noise: NoiseModel::main_chip(15.5),
            methods: vec![Method::Niba, Method::Fgr, Method::Svmc],
            s_start: 0.12,
            steps: 200,
            svmc: SvmcRun::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PVsTParams {
    pub h1: f64,
    pub temps_mk: Vec<f64>,
    /// Bath at the reference temperature; `temps_mk` overrides it.
    pub noise: NoiseModel,
    pub methods: Vec<Method>,
    pub s_start: f64,
    pub steps: usize,
    pub svmc: SvmcRun,
}

impl Default for PVsTParams {
    fn default() -> Self {
        Self {
            h1: 0.44,
            temps_mk: vec![15.5, 20.0, 25.0, 30.0, 35.0, 40.0],
            noise: NoiseModel::main_chip(15.5),
            methods: vec![Method::Niba, Method::Svmc],
            s_start: 0.12,
            steps: 200,
            svmc: SvmcRun::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmcParams {
    pub problem: ProblemKind,
    /// Read the problem from a text file instead of generating it.
    pub problem_file: Option<PathBuf>,
    pub instances: usize,
    pub restarts: usize,
    pub sweeps: usize,
    pub temp_mk: f64,
    pub chi: f64,
}

impl Default for SvmcParams {
    fn default() -> Self {
        Self {
            problem: ProblemKind::WeakStrongPair { h1: 0.44 },
            problem_file: None,
            instances: 1,
            restarts: 1000,
            sweeps: 128_000,
            temp_mk: 15.0,
            chi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KramerParams {
    pub h1: f64,
    pub s_values: Vec<f64>,
    /// Explicit temperatures for every s; empty means place them by
    /// `barrier_ratios`.
    pub temps_mk: Vec<f64>,
    pub barrier_ratios: Vec<f64>,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub radius: f64,
}

impl Default for KramerParams {
    fn default() -> Self {
        let k = KramerConfig::default();
        Self {
            h1: 0.44,
            s_values: vec![0.217, 0.233, 0.249, 0.265],
            temps_mk: k.temps_mk,
            barrier_ratios: k.barrier_ratios,
            restarts: k.restarts,
            max_sweeps: k.max_sweeps,
            radius: k.radius,
        }
    }
}

/// Where along the anneal the instanton is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstantonAt {
    /// Where the two minima are degenerate.
    Degenerate,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstantonParams {
    pub h1_values: Vec<f64>,
    pub at: InstantonAt,
    pub attempt: AttemptRate,
    /// Grid for minima tracking.
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
    /// Also write U on a square grid of this many points per axis.
    pub potential_grid: Option<usize>,
}

impl Default for InstantonParams {
    fn default() -> Self {
        Self {
            h1_values: vec![0.44, 0.46, 0.47, 0.48],
            at: InstantonAt::Degenerate,
            attempt: AttemptRate::default(),
            s_min: 0.1,
            s_max: 0.6,
            points: 101,
            potential_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlassParams {
    /// Rows of five cells; 40 qubits per row.
    pub rows: Vec<usize>,
    pub h1: f64,
    pub instances: usize,
    pub restarts: usize,
    pub sweeps: usize,
    pub temp_mk: f64,
    pub chi: f64,
    pub bootstrap: usize,
}

impl Default for GlassParams {
    fn default() -> Self {
        Self {
            rows: vec![1, 2, 3, 4, 5],
            h1: 0.4,
            instances: 50,
            restarts: 100,
            sweeps: 128_000,
            temp_mk: 15.0,
            chi: 0.0,
            bootstrap: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambParams {
    pub noise: NoiseModel,
    pub nu_ghz: Vec<f64>,
    pub kappa: f64,
    /// Ip(s)²/Ip(1)² for the validity window.
    pub ip_ratio_sq: f64,
}

impl Default for LambParams {
    fn default() -> Self {
        Self {
            noise: NoiseModel {
                omega_c: 1000.0,
                ..NoiseModel::earlier_chip(15.0)
            },
            nu_ghz: vec![0.01, 0.1, 0.5, 1.0, 2.0, 5.0],
            kappa: 10.0,
            ip_ratio_sq: 1.0 / 3.0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_list<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(config_err(format!("{name} must not be empty")));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(config_err(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

fn check_anneal(s_start: f64, steps: usize) -> Result<()> {
    if !(0.0..1.0).contains(&s_start) || steps == 0 {
        return Err(config_err("s_start must lie in [0, 1) and steps must be positive"));
    }
    Ok(())
}

fn check_svmc(run: &SvmcRun) -> Result<()> {
    if run.sweeps == 0 || run.restarts == 0 {
        return Err(config_err("svmc sweeps and restarts must be positive"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            schedule: ScheduleSource::default(),
            experiment,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Schema checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(config_err(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        match &self.schedule {
            ScheduleSource::FluxQubit { points, params } => {
                if *points < 2 {
                    return Err(config_err("schedule needs at least 2 points"));
                }
                params.validate()?;
            }
            ScheduleSource::Linear { points, .. } if *points < 2 => {
                return Err(config_err("schedule needs at least 2 points"));
            }
            _ => {}
        }
        match &self.experiment {
            Experiment::Schedule(_) => {}
            Experiment::Spectrum(p) => {
                p.spec.validate()?;
                check_unit("s_min", p.s_min)?;
                check_unit("s_max", p.s_max)?;
                if !(p.s_min < p.s_max) || p.points < 2 {
                    return Err(config_err("spectrum needs s_min < s_max and at least 2 points"));
                }
                if let Some(n) = &p.noise {
                    n.validate()?;
                }
            }
            Experiment::Rates(p) => {
                p.spec.validate()?;
                p.noise.validate()?;
                check_list("methods", &p.methods)?;
                check_anneal(p.s_start, p.steps)?;
            }
            Experiment::Evolve(p) => {
                p.spec.validate()?;
                p.noise.validate()?;
                check_anneal(p.s_start, p.steps)?;
                if let Some(c) = &p.control_noise {
                    if c.samples == 0 {
                        return Err(config_err("control_noise.samples must be positive"));
                    }
                }
            }
            Experiment::PVsH1(p) => {
                check_list("h1_values", &p.h1_values)?;
                check_list("methods", &p.methods)?;
                for &h1 in &p.h1_values {
                    WeakStrongSpec::with_h1(h1).validate()?;
                }
                p.noise.validate()?;
                check_anneal(p.s_start, p.steps)?;
                check_svmc(&p.svmc)?;
            }
            Experiment::PVsT(p) => {
                check_list("temps_mk", &p.temps_mk)?;
                check_list("methods", &p.methods)?;
                WeakStrongSpec::with_h1(p.h1).validate()?;
                for &t in &p.temps_mk {
                    p.noise.with_temp(t).validate()?;
                }
                check_anneal(p.s_start, p.steps)?;
                check_svmc(&p.svmc)?;
            }
            Experiment::Svmc(p) => {
                if p.instances == 0 || p.restarts == 0 {
                    return Err(config_err("instances and restarts must be positive"));
                }
                SvmcConfig {
                    sweeps: p.sweeps,
                    temp_mk: p.temp_mk,
                    chi: p.chi,
                    seed: 0,
                }
                .validate()?;
            }
            Experiment::Kramer(p) => {
                check_list("s_values", &p.s_values)?;
                WeakStrongSpec::with_h1(p.h1).validate()?;
                let count = if p.temps_mk.is_empty() { p.barrier_ratios.len() } else { p.temps_mk.len() };
                if count < 4 {
                    return Err(config_err("kramer needs at least four temperatures"));
                }
                if p.restarts == 0 || p.max_sweeps == 0 {
                    return Err(config_err("restarts and max_sweeps must be positive"));
                }
            }
            Experiment::Instanton(p) => {
                check_list("h1_values", &p.h1_values)?;
                for &h1 in &p.h1_values {
                    WeakStrongSpec::with_h1(h1).validate()?;
                }
                if !(p.s_min < p.s_max) || p.points < 3 {
                    return Err(config_err("instanton tracking needs s_min < s_max and at least 3 points"));
                }
            }
            Experiment::Glass(p) => {
                check_list("rows", &p.rows)?;
                if p.instances == 0 || p.restarts == 0 || p.sweeps == 0 {
                    return Err(config_err("instances, restarts and sweeps must be positive"));
                }
                if p.rows.iter().any(|&r| r == 0 || r > 6) {
                    return Err(config_err("glass rows must lie in 1..=6"));
                }
            }
            Experiment::Lamb(p) => {
                check_list("nu_ghz", &p.nu_ghz)?;
                p.noise.validate()?;
            }
        }
        Ok(())
    }
}

/// Everything a run leaves behind, besides the files themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub threads: usize,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Value,
    pub manifest: Manifest,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Outputs<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }
}

/// Run one experiment into `out_dir`. `threads = None` uses the global
/// pool. Output files depend only on the config.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunReport> {
    config.validate()?;
    let hash = config.hash()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::from(e).context(format!("creating {}", out_dir.display())))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut outputs = Outputs {
        dir: out_dir,
        files: Vec::new(),
    };
    let (summary, used_threads) = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| config_err(format!("thread pool: {e}")))?;
            (pool.install(|| dispatch(config, &mut outputs))?, n)
        }
        None => (dispatch(config, &mut outputs)?, rayon::current_num_threads()),
    };
    let name = config.experiment.name();
    let summary = json!({ "experiment": name, "config_hash": hash, "result": summary });
    {
        let mut w = outputs.create("summary.json")?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
        w.flush()?;
    }
    let mut manifest = Manifest {
        experiment: name.to_string(),
        config_version: config.version,
        config_hash: hash,
        seed: config.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        threads: used_threads,
        outputs: Vec::new(),
        started_unix_s: started,
        wall_time_s: 0.0,
    };
    outputs.files.push("manifest.json".into());
    manifest.outputs = outputs.files.clone();
    manifest.wall_time_s = clock.elapsed().as_secs_f64();
    let mut w = outputs.create("manifest.json")?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        summary,
        manifest,
    })
}

fn dispatch(config: &ExperimentConfig, out: &mut Outputs) -> Result<Value> {
    let name = config.experiment.name();
    if let Experiment::Lamb(p) = &config.experiment {
        return run_lamb(p, out).map_err(|e| e.context(name));
    }
    let schedule = config.schedule.load().map_err(|e| e.context(format!("{name}: loading schedule")))?;
    let seed = config.seed;
    match &config.experiment {
        Experiment::Schedule(_) => run_schedule(&schedule, out),
        Experiment::Spectrum(p) => run_spectrum(&schedule, p, out),
        Experiment::Rates(p) => run_rates(&schedule, p, out),
        Experiment::Evolve(p) => run_evolve(&schedule, p, out),
        Experiment::PVsH1(p) => run_p_vs_h1(&schedule, p, seed, out),
        Experiment::PVsT(p) => run_p_vs_t(&schedule, p, seed, out),
        Experiment::Svmc(p) => run_svmc(&schedule, p, seed, out),
        Experiment::Kramer(p) => run_kramer(&schedule, p, seed, out),
        Experiment::Instanton(p) => run_instanton(&schedule, p, out),
        Experiment::Glass(p) => run_glass(&schedule, p, seed, out),
        Experiment::Lamb(_) => unreachable!("handled above"),
    }
    .map_err(|e| match e {
        Error::Context { .. } => e,
        other => other.context(name),
    })
}

fn run_schedule(schedule: &AnnealSchedule, out: &mut Outputs) -> Result<Value> {
    let mut w = out.create("schedule.csv")?;
    schedule.write_csv(&mut w)?;
    w.flush()?;
    let last = schedule.len() - 1;
    Ok(json!({
        "points": schedule.len(),
        "a_start_ghz": schedule.a_ghz[0],
        "a_end_ghz": schedule.a_ghz[last],
        "b_start_ghz": schedule.b_ghz[0],
        "b_end_ghz": schedule.b_ghz[last],
    }))
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect()
}

fn run_spectrum(schedule: &AnnealSchedule, p: &SpectrumParams, out: &mut Outputs) -> Result<Value> {
    let s_grid = grid(p.s_min, p.s_max, p.points);
    let records = scan(schedule, &p.spec, &s_grid, p.noise.as_ref())?;
    let mut w = out.create("spectrum.csv")?;
    write_slice_csv(&records, &mut w)?;
    w.flush()?;
    let gap = match p.gap_window {
        Some([lo, hi]) => Some(min_gap(schedule, &p.spec, lo, hi, 41)?),
        None => None,
    };
    if let Some(s) = p.dump_operator_at {
        let (a, b) = schedule.ab_at(s);
        let h = build_subspace_hamiltonian(&p.spec, a, b)?;
        let mut w = out.create("operator.txt")?;
        write_operator_dump(h.triplets(), &mut w)?;
        w.flush()?;
    }
    Ok(json!({ "points": records.len(), "min_gap": gap }))
}

fn run_rates(schedule: &AnnealSchedule, p: &RatesParams, out: &mut Outputs) -> Result<Value> {
    let s_grid = anneal_grid(p.s_start, p.steps);
    let mut all = Vec::new();
    let mut g1_max = Vec::new();
    for &m in &p.methods {
        let rates = rate_points(schedule, &p.spec, &p.noise, m, &s_grid).map_err(|e| e.context(format!("method {}", m.as_str())))?;
        g1_max.push(json!({ "method": m.as_str(), "max_abs_g1": rates.iter().map(|r| r.g1.abs()).fold(0.0, f64::max) }));
        all.extend(rates);
    }
    let mut w = out.create("rates.csv")?;
    write_rates_csv(&all, &mut w)?;
    w.flush()?;
    Ok(json!({ "rows": all.len(), "methods": g1_max }))
}

fn run_evolve(schedule: &AnnealSchedule, p: &EvolveParams, out: &mut Outputs) -> Result<Value> {
    let (rates, trace) = evolve_populations(schedule, &p.spec, &p.noise, p.method, p.s_start, p.steps)?;
    let mut w = out.create("rates.csv")?;
    write_rates_csv(&rates, &mut w)?;
    w.flush()?;
    let mut w = out.create("trace.csv")?;
    write_trace_csv(&trace, &mut w)?;
    w.flush()?;
    let summary = EvolutionSummary::new(p.method, p.spec, p.noise, p.s_start, &rates, &trace);
    let averaged = match &p.control_noise {
        Some(c) => {
            let (mean, stderr) = averaged_success(schedule, &p.spec, &p.noise, p.method, p.s_start, p.steps, c)?;
            Some(json!({ "mean": mean, "stderr": stderr, "samples": c.samples }))
        }
        None => None,
    };
    Ok(json!({ "evolution": summary, "control_noise_average": averaged }))
}

/// One success-probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessPoint {
    /// The swept parameter: h1 or temperature in mK.
    pub x: f64,
    pub method: Method,
    pub p_success: f64,
    /// Wilson interval for sampled methods.
    pub interval: Option<(f64, f64)>,
}

fn success_at(
    schedule: &AnnealSchedule,
    h1: f64,
    model: &NoiseModel,
    method: Method,
    s_start: f64,
    steps: usize,
    svmc: &SvmcRun,
    seed: u64,
) -> Result<(f64, Option<(f64, f64)>)> {
    let spec = WeakStrongSpec::with_h1(h1);
    match method {
        Method::Niba | Method::Fgr => {
            let rm = if method == Method::Niba { RateMethod::Niba } else { RateMethod::Fgr };
            let (_, trace) = evolve_populations(schedule, &spec, model, rm, s_start, steps)?;
            Ok((trace.p_success, None))
        }
        Method::Svmc => {
            let problem = generate_problem(&ProblemKind::WeakStrongPair { h1 }, 0)?;
            let cfg = SvmcConfig {
                sweeps: svmc.sweeps,
                temp_mk: model.temp_mk,
                chi: svmc.chi,
                seed,
            };
            let runs = svmc_restarts(&problem, schedule, &cfg, svmc.restarts)?;
            let est = SuccessEstimate::from_counts(runs.iter().filter(|r| r.success).count(), runs.len());
            Ok((est.p, Some((est.lo, est.hi))))
        }
    }
}

fn write_success_csv(points: &[SuccessPoint], x_name: &str, out: &mut Outputs, file: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out.create(file)?);
    w.write_record([x_name, "method", "p_success", "ci_lo", "ci_hi"])?;
    for p in points {
        let (lo, hi) = p.interval.map_or((String::new(), String::new()), |(a, b)| (fmt_sig(a), fmt_sig(b)));
        w.write_record([fmt_sig(p.x), p.method.as_str().into(), fmt_sig(p.p_success), lo, hi])?;
    }
    w.flush()?;
    Ok(())
}

/// Success probability over a list of (x, h1, bath) points for each method,
/// gathered in input order.
fn success_sweep(
    schedule: &AnnealSchedule,
    points: &[(f64, f64, NoiseModel)],
    methods: &[Method],
    s_start: f64,
    steps: usize,
    svmc: &SvmcRun,
    seed: u64,
    label: &str,
) -> Result<Vec<SuccessPoint>> {
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..methods.len()).map(move |m| (i, m))).collect();
    jobs.par_iter()
        .map(|&(i, m)| {
            let (x, h1, model) = points[i];
            let method = methods[m];
            let (p, interval) = success_at(schedule, h1, &model, method, s_start, steps, svmc, run_seed(seed, i as u64))
                .map_err(|e| e.context(format!("{label} = {x}, method {}", method.as_str())))?;
            Ok(SuccessPoint {
                x,
                method,
                p_success: p,
                interval,
            })
        })
        .collect()
}

fn by_method(points: &[SuccessPoint]) -> Value {
    let mut map = serde_json::Map::new();
    for p in points {
        map.entry(p.method.as_str())
            .or_insert_with(|| Value::Array(Vec::new()))
            .as_array_mut()
            .expect("array entry")
            .push(json!([p.x, p.p_success]));
    }
    Value::Object(map)
}

fn run_p_vs_h1(schedule: &AnnealSchedule, p: &PVsH1Params, seed: u64, out: &mut Outputs) -> Result<Value> {
    let pts: Vec<(f64, f64, NoiseModel)> = p.h1_values.iter().map(|&h| (h, h, p.noise)).collect();
    let res = success_sweep(schedule, &pts, &p.methods, p.s_start, p.steps, &p.svmc, seed, "h1")?;
    write_success_csv(&res, "h1", out, "p_vs_h1.csv")?;
    Ok(json!({ "temp_mk": p.noise.temp_mk, "p_success": by_method(&res) }))
}

fn run_p_vs_t(schedule: &AnnealSchedule, p: &PVsTParams, seed: u64, out: &mut Outputs) -> Result<Value> {
    let pts: Vec<(f64, f64, NoiseModel)> = p.temps_mk.iter().map(|&t| (t, p.h1, p.noise.with_temp(t))).collect();
    let res = success_sweep(schedule, &pts, &p.methods, p.s_start, p.steps, &p.svmc, seed, "temp_mk")?;
    write_success_csv(&res, "temp_mk", out, "p_vs_t.csv")?;
    Ok(json!({ "h1": p.h1, "p_success": by_method(&res) }))
}

fn load_problem(p: &SvmcParams, instance: usize, seed: u64) -> Result<IsingProblem> {
    match &p.problem_file {
        Some(path) => {
            let f = File::open(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
            IsingProblem::read_text(BufReader::new(f)).map_err(|e| e.context(format!("parsing {}", path.display())))
        }
        None => generate_problem(&p.problem, run_seed(seed, instance as u64)),
    }
}

fn run_svmc(schedule: &AnnealSchedule, p: &SvmcParams, seed: u64, out: &mut Outputs) -> Result<Value> {
    let mut records = Vec::new();
    let mut per_instance = Vec::new();
    for i in 0..p.instances {
        let mut problem = load_problem(p, i, seed).map_err(|e| e.context(format!("instance {i}")))?;
        if problem.known_ground.is_none() && !problem.clusters.is_empty() {
            problem.known_ground = Some(problem.cluster_brute_force()?);
        }
        let cfg = SvmcConfig {
            sweeps: p.sweeps,
            temp_mk: p.temp_mk,
            chi: p.chi,
            seed: run_seed(seed ^ 0x5356_4d43, i as u64),
        };
        let runs = svmc_restarts(&problem, schedule, &cfg, p.restarts).map_err(|e| e.context(format!("instance {i}")))?;
        let ok = runs.iter().filter(|r| r.success).count();
        per_instance.push(SuccessEstimate::from_counts(ok, runs.len()));
        records.extend(runs.iter().map(|r| RunRecord {
            instance: i,
            seed: r.seed,
            success: r.success,
            energy: r.energy,
        }));
        let mut w = out.create(&format!("problem_{i}.txt"))?;
        problem.write_text(&mut w)?;
        w.flush()?;
    }
    let mut w = out.create("svmc_results.csv")?;
    write_results_csv(&records, &mut w)?;
    w.flush()?;
    let total = SuccessEstimate::from_counts(records.iter().filter(|r| r.success).count(), records.len());
    Ok(json!({ "overall": total, "instances": per_instance }))
}

fn run_kramer(schedule: &AnnealSchedule, p: &KramerParams, seed: u64, out: &mut Outputs) -> Result<Value> {
    let spec = WeakStrongSpec::with_h1(p.h1);
    let fits = p
        .s_values
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let cfg = KramerConfig {
                s,
                temps_mk: p.temps_mk.clone(),
                barrier_ratios: p.barrier_ratios.clone(),
                restarts: p.restarts,
                max_sweeps: p.max_sweeps,
                radius: p.radius,
                seed: run_seed(seed, k as u64),
            };
            kramer_fit(&spec, schedule, &cfg).map_err(|e| e.context(format!("kramer at s = {s}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(out.create("kramer_points.csv")?);
    w.write_record(["s", "temp_mk", "mean_sweeps", "escaped", "runs", "dropped"])?;
    for f in &fits {
        for pt in &f.points {
            w.write_record([
                fmt_sig(f.s),
                fmt_sig(pt.temp_mk),
                fmt_sig(pt.mean_sweeps),
                pt.escaped.to_string(),
                pt.runs.to_string(),
                u8::from(pt.dropped).to_string(),
            ])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(out.create("kramer_fit.csv")?);
    w.write_record(["s", "barrier_ghz", "fitted_ghz", "relative_error", "r_squared"])?;
    for f in &fits {
        let rel = f.delta_u_ghz / f.barrier_ghz - 1.0;
        w.write_record([f.s, f.barrier_ghz, f.delta_u_ghz, rel, f.r_squared].map(fmt_sig))?;
    }
    w.flush()?;
    let rows: Vec<Value> = fits
        .iter()
        .map(|f| json!({ "s": f.s, "barrier_ghz": f.barrier_ghz, "fitted_ghz": f.delta_u_ghz, "r_squared": f.r_squared }))
        .collect();
    Ok(json!({ "h1": p.h1, "fits": rows }))
}

fn run_instanton(schedule: &AnnealSchedule, p: &InstantonParams, out: &mut Outputs) -> Result<Value> {
    let s_grid = grid(p.s_min, p.s_max, p.points);
    let mut minima = csv::Writer::from_writer(out.create("minima.csv")?);
    minima.write_record(["h1", "s", "branch", "q1", "q2", "u_ghz", "barrier_ghz"])?;
    let mut table = csv::Writer::from_writer(out.create("instanton.csv")?);
    table.write_record(["h1", "s", "action", "epsilon", "attempt_rate_ghz", "gap_ghz", "exact_gap_ghz", "q_a", "q_b"])?;
    let mut rows = Vec::new();
    for &h1 in &p.h1_values {
        let spec = WeakStrongSpec::with_h1(h1);
        let path = track_minima(schedule, &spec, &s_grid).map_err(|e| e.context(format!("tracking minima at h1 = {h1}")))?;
        for (b, branch) in path.branches.iter().enumerate() {
            for (k, idx) in branch.iter().enumerate() {
                if let Some(i) = idx {
                    let m = path.slices[k].minima[*i];
                    let barrier = path.barrier[k].map_or(String::new(), fmt_sig);
                    minima.write_record([
                        fmt_sig(h1),
                        fmt_sig(path.slices[k].s),
                        b.to_string(),
                        fmt_sig(m.q1),
                        fmt_sig(m.q2),
                        fmt_sig(m.u),
                        barrier,
                    ])?;
                }
            }
        }
        let s = match p.at {
            InstantonAt::Fixed(s) => s,
            InstantonAt::Degenerate => path
                .s_c
                .ok_or_else(|| Error::SingleWell { s: p.s_max }.context(format!("no degenerate point at h1 = {h1}")))?,
        };
        let inst = instanton_gap(&spec, schedule, s, p.attempt).map_err(|e| e.context(format!("instanton at h1 = {h1}")))?;
        let exact = slice_at(schedule, &spec, s, 3)?.0.omega10;
        table.write_record([h1, s, inst.action, inst.epsilon, inst.attempt_rate_ghz, inst.gap_ghz, exact, inst.q_a, inst.q_b].map(fmt_sig))?;
        if let Some(n) = p.potential_grid {
            let mut w = out.create(&format!("potential_h1_{h1:.3}.csv"))?;
            write_potential_csv(&Potential::new(&spec, schedule, s), n, &mut w)?;
            w.flush()?;
        }
        rows.push(json!({ "h1": h1, "s": s, "gap_ghz": inst.gap_ghz, "exact_gap_ghz": exact, "s_c": path.s_c }));
    }
    minima.flush()?;
    table.flush()?;
    Ok(json!({ "rows": rows }))
}

fn run_glass(schedule: &AnnealSchedule, p: &GlassParams, seed: u64, out: &mut Outputs) -> Result<Value> {
    let mut runs_w = csv::Writer::from_writer(out.create("glass_runs.csv")?);
    runs_w.write_record(["qubits", "instance", "seed", "success", "energy"])?;
    let mut inst_w = csv::Writer::from_writer(out.create("glass_instances.csv")?);
    inst_w.write_record(["qubits", "instance", "p_success", "ci_lo", "ci_hi"])?;
    let mut sizes = Vec::new();
    for &rows in &p.rows {
        let mut success = Vec::with_capacity(p.instances);
        for i in 0..p.instances {
            let tag = (rows as u64) << 32 | i as u64;
            let problem = generate_problem(&ProblemKind::Glass { rows, h1: p.h1 }, run_seed(seed, tag))?;
            let cfg = SvmcConfig {
                sweeps: p.sweeps,
                temp_mk: p.temp_mk,
                chi: p.chi,
                seed: run_seed(seed ^ 0x474c_4153, tag),
            };
            let runs = svmc_restarts(&problem, schedule, &cfg, p.restarts)
                .map_err(|e| e.context(format!("glass rows = {rows}, instance {i}")))?;
            let qubits = problem.num_spins();
            for r in &runs {
                runs_w.write_record([
                    qubits.to_string(),
                    i.to_string(),
                    r.seed.to_string(),
                    u8::from(r.success).to_string(),
                    fmt_sig(r.energy),
                ])?;
            }
            let est = SuccessEstimate::from_counts(runs.iter().filter(|r| r.success).count(), runs.len());
            inst_w.write_record([qubits.to_string(), i.to_string(), fmt_sig(est.p), fmt_sig(est.lo), fmt_sig(est.hi)])?;
            success.push(est.p);
        }
        sizes.push(SizeResults {
            qubits: 40 * rows,
            success,
        });
    }
    runs_w.flush()?;
    inst_w.flush()?;
    let fit = scaling_fit(&sizes, p.bootstrap, seed)?;
    let means: Vec<Value> = sizes
        .iter()
        .map(|s| json!({ "qubits": s.qubits, "mean_p": s.success.iter().sum::<f64>() / s.success.len() as f64 }))
        .collect();
    Ok(json!({ "fit": fit, "sizes": means }))
}

fn run_lamb(p: &LambParams, out: &mut Outputs) -> Result<Value> {
    let mut w = csv::Writer::from_writer(out.create("lamb.csv")?);
    w.write_record(["nu_ghz", "numeric_ghz", "closed_form_ghz", "relative_difference"])?;
    let mut worst: f64 = 0.0;
    for &nu in &p.nu_ghz {
        let ls = lamb_shift(&p.noise, nu, p.kappa).map_err(|e| e.context(format!("lamb shift at {nu} GHz")))?;
        let rel = (ls.numeric - ls.approx) / ls.approx;
        worst = worst.max(rel.abs());
        w.write_record([nu, ls.numeric, ls.approx, rel].map(fmt_sig))?;
    }
    w.flush()?;
    let window = validity_window(&p.noise, p.ip_ratio_sq)?;
    Ok(json!({ "max_relative_difference": worst, "validity_window": window }))
}

/// Machine-readable error report for the CLI.
pub fn error_report(err: &Error) -> Value {
    json!({ "error": err.kind(), "message": err.to_string() })
}
