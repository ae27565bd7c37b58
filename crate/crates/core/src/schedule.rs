//! Annealing schedule from a compound-Josephson-junction flux-qubit model.
//!
//! The qubit is reduced to one phase coordinate φ with Hamiltonian
//! `−E_C ∂² + E_J cos φ cos(φ_cjj/2) + E_L (φ − φ_x)²/2`. For each anneal
//! fraction s the CJJ phase is tuned until the persistent current follows
//! `M_AFM · Ip · 2π/Φ₀ = ip_slope · s + ip_offset`; then A = Δ/2 and
//! B = M_AFM Ip² / h.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::SymTridiagonal;
use crate::roots;
use crate::units::{self, FLUX_QUANTUM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxQubitParams {
    pub e_c: f64,
    pub e_cjj: f64,
    pub e_j: f64,
    pub e_l: f64,
    pub e_lcjj: f64,
    /// Inter-qubit mutual inductance, H.
    pub m_afm: f64,
    /// Flux quantum, Wb.
    pub phi0: f64,
    pub ip_slope: f64,
    pub ip_offset: f64,
}

impl Default for FluxQubitParams {
    fn default() -> Self {
        Self {
            e_c: 0.67,
            e_cjj: 1.35,
            e_j: 1071.0,
            e_l: 537.0,
            e_lcjj: 11680.0,
            m_afm: 1.41e-12,
            phi0: FLUX_QUANTUM,
            ip_slope: 4.11e-3,
            ip_offset: 1.21e-3,
        }
    }
}

impl FluxQubitParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e_c", self.e_c),
            ("e_cjj", self.e_cjj),
            ("e_j", self.e_j),
            ("e_l", self.e_l),
            ("e_lcjj", self.e_lcjj),
            ("m_afm", self.m_afm),
            ("phi0", self.phi0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ip_slope.is_finite() && self.ip_offset.is_finite()) {
            return Err(invalid("ip law coefficients must be finite"));
        }
        Ok(())
    }

    /// Target of the linear law, M·Ip·2π/Φ₀, at anneal fraction `s`.
    pub fn ip_target(&self, s: f64) -> f64 {
        self.ip_slope * s + self.ip_offset
    }

    /// Effective loop inductance L + L_CJJ/4 in henries.
    pub fn loop_inductance(&self) -> f64 {
        let reduced = self.phi0 / (2.0 * PI);
        let l_body = reduced * reduced / units::ghz_to_joules(self.e_l);
        let l_cjj = reduced * reduced / units::ghz_to_joules(self.e_lcjj);
        l_body + 0.25 * l_cjj
    }

    /// Dimensionless coupling strength M·Ip·2π/Φ₀ for a current in amperes.
    pub fn coupling_number(&self, ip: f64) -> f64 {
        self.m_afm * ip * 2.0 * PI / self.phi0
    }

    /// B in GHz for a persistent current in amperes.
    pub fn b_from_ip(&self, ip: f64) -> f64 {
        units::joules_to_ghz(self.m_afm * ip * ip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxGrid {
    pub half_width: f64,
    pub points: usize,
}

impl Default for FluxGrid {
    fn default() -> Self {
        Self {
            half_width: 3.0,
            points: 3073,
        }
    }
}

impl FluxGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points + 1) as f64
    }

    /// Interior nodes; the Dirichlet walls sit at ±half_width.
    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.points)
            .map(|i| -self.half_width + (i + 1) as f64 * dx)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FluxLevels {
    pub phi: Vec<f64>,
    pub levels: Vec<f64>,
    /// Normalized so that Σ ψ² dφ = 1.
    pub wavefunctions: Vec<Vec<f64>>,
    pub boundary_amplitude: f64,
}

impl FluxLevels {
    pub fn spacing(&self) -> f64 {
        self.phi[1] - self.phi[0]
    }

    /// ⟨a|φ|b⟩ on the grid.
    pub fn phase_element(&self, a: usize, b: usize) -> f64 {
        let dx = self.spacing();
        self.wavefunctions[a]
            .iter()
            .zip(&self.wavefunctions[b])
            .zip(&self.phi)
            .map(|((x, y), p)| x * y * p)
            .sum::<f64>()
            * dx
    }
}

const BOUNDARY_THRESHOLD: f64 = 1e-8;

/// Lowest `k` levels of the one-dimensional flux-qubit Hamiltonian.
pub fn solve_flux_levels(
    params: &FluxQubitParams,
    phi_cjj: f64,
    phi_x: f64,
    grid: &FluxGrid,
    k: usize,
) -> Result<FluxLevels> {
    if grid.points < 257 {
        return Err(invalid(format!("grid needs ≥ 257 points, got {}", grid.points)));
    }
    if !(grid.half_width > 0.0) {
        return Err(invalid("grid half_width must be positive"));
    }
    let phi = grid.nodes();
    let dx = grid.spacing();
    let kinetic = params.e_c / (dx * dx);
    let barrier = params.e_j * (0.5 * phi_cjj).cos();
    let diag: Vec<f64> = phi
        .iter()
        .map(|&p| 2.0 * kinetic + barrier * p.cos() + 0.5 * params.e_l * (p - phi_x).powi(2))
        .collect();
    let off = vec![-kinetic; grid.points - 1];
    let h = SymTridiagonal::new(diag, off);
    let (levels, vectors) = h.lowest_eigenpairs(k)?;
    let norm = 1.0 / dx.sqrt();
    let mut boundary = 0.0f64;
    let wavefunctions: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| {
            let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let edge = v[0].abs().max(v[v.len() - 1].abs());
            boundary = boundary.max(edge / peak);
            v.into_iter().map(|x| x * norm).collect()
        })
        .collect();
    if boundary > BOUNDARY_THRESHOLD {
        return Err(Error::GridTooNarrow {
            amplitude: boundary,
            threshold: BOUNDARY_THRESHOLD,
        });
    }
    Ok(FluxLevels {
        phi,
        levels,
        wavefunctions,
        boundary_amplitude: boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    /// Splitting E₁ − E₀ at zero external flux, GHz.
    pub delta1: f64,
    /// Persistent current magnitude, A.
    pub ip: f64,
}

/// Splitting and persistent current at a given CJJ phase.
///
/// The current is the matrix element of Φ/(L + L_CJJ/4) between the
/// localized states (|g⟩ ± |e⟩)/√2, which equals the g–e element of the
/// same operator.
pub fn qubit_params_at(params: &FluxQubitParams, phi_cjj: f64, grid: &FluxGrid) -> Result<QubitParams> {
    if !(phi_cjj > 0.0 && phi_cjj < 2.0 * PI) {
        return Err(invalid(format!("phi_cjj must lie in (0, 2π), got {phi_cjj}")));
    }
    let lv = solve_flux_levels(params, phi_cjj, 0.0, grid, 2)?;
    let element = lv.phase_element(0, 1).abs();
    let ip = element * params.phi0 / (2.0 * PI) / params.loop_inductance();
    Ok(QubitParams {
        delta1: lv.levels[1] - lv.levels[0],
        ip,
    })
}

/// Tabulated schedule. Between grid points A and B are interpolated
/// linearly, which keeps both monotone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub s_grid: Vec<f64>,
    pub a_ghz: Vec<f64>,
    pub b_ghz: Vec<f64>,
    pub ip_amp: Vec<f64>,
    pub phi_cjj: Vec<f64>,
}

impl AnnealSchedule {
    /// Schedule from explicit tables; used for synthetic schedules in tests
    /// and examples. `ip_amp`/`phi_cjj` are filled with NaN.
    pub fn from_tables(s_grid: Vec<f64>, a_ghz: Vec<f64>, b_ghz: Vec<f64>) -> Result<Self> {
        let n = s_grid.len();
        let sched = Self {
            s_grid,
            a_ghz,
            b_ghz,
            ip_amp: vec![f64::NAN; n],
            phi_cjj: vec![f64::NAN; n],
        };
        sched.validate()?;
        Ok(sched)
    }

    /// Linear ramps A(s) = a0(1 − s), B(s) = b1 s on `points` nodes.
    pub fn linear(a0: f64, b1: f64, points: usize) -> Result<Self> {
        let s: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        let a = s.iter().map(|x| a0 * (1.0 - x)).collect();
        let b = s.iter().map(|x| b1 * x).collect();
        Self::from_tables(s, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.s_grid.len();
        if n < 2 || self.a_ghz.len() != n || self.b_ghz.len() != n {
            return Err(invalid("schedule tables must have equal length ≥ 2"));
        }
        if self.s_grid[0] != 0.0 || self.s_grid[n - 1] != 1.0 {
            return Err(invalid("schedule grid must start at 0 and end at 1"));
        }
        if self.s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("schedule grid must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, 1.0);
        let n = self.s_grid.len();
        let i = match self.s_grid.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let t = (s - self.s_grid[i]) / (self.s_grid[i + 1] - self.s_grid[i]);
        (i, t)
    }

    fn interp(&self, table: &[f64], s: f64) -> f64 {
        let (i, t) = self.locate(s);
        table[i] + t * (table[i + 1] - table[i])
    }

    pub fn a_at(&self, s: f64) -> f64 {
        self.interp(&self.a_ghz, s)
    }

    pub fn b_at(&self, s: f64) -> f64 {
        self.interp(&self.b_ghz, s)
    }

    pub fn ab_at(&self, s: f64) -> (f64, f64) {
        (self.a_at(s), self.b_at(s))
    }

    /// B(s)/B(1), the scale factor of the s-dependent noise parameters.
    pub fn b_ratio(&self, s: f64) -> f64 {
        self.b_at(s) / self.b_ghz[self.b_ghz.len() - 1]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "a_ghz", "b_ghz", "ip_amp", "phi_cjj_rad"])?;
        for i in 0..self.len() {
            wr.write_record([
                fmt_sig(self.s_grid[i]),
                fmt_sig(self.a_ghz[i]),
                fmt_sig(self.b_ghz[i]),
                fmt_sig(self.ip_amp[i]),
                fmt_sig(self.phi_cjj[i]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let expected = ["s", "a_ghz", "b_ghz", "ip_amp", "phi_cjj_rad"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected header {}", expected.join(",")),
            });
        }
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            for (c, col) in cols.iter_mut().enumerate() {
                let field = rec.get(c).unwrap_or("");
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line + 2,
                    detail: format!("bad number {field:?}"),
                })?;
                col.push(v);
            }
        }
        let [s_grid, a_ghz, b_ghz, ip_amp, phi_cjj] = cols;
        let sched = Self {
            s_grid,
            a_ghz,
            b_ghz,
            ip_amp,
            phi_cjj,
        };
        sched.validate()?;
        Ok(sched)
    }
}

/// Twelve significant digits, the precision of every CSV this crate writes.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    format!("{:.11e}", v)
}

/// Solve for the CJJ phase that reproduces the linear Ip law at `s`, to
/// 1e-10 rad inside the bracket [π/2, 2π − 0.05].
pub fn solve_phi_cjj(params: &FluxQubitParams, grid: &FluxGrid, s: f64) -> Result<(f64, QubitParams)> {
    let target = params.ip_target(s);
    let residual = |phi: f64| -> Result<f64> {
        let q = qubit_params_at(params, phi, grid)?;
        Ok(params.coupling_number(q.ip) - target)
    };
    let (lo, hi) = (0.5 * PI, 2.0 * PI - 0.05);
    let phi = roots::brent(residual, lo, hi, 1e-10)?.ok_or_else(|| Error::BracketFailure {
        s,
        detail: format!("Ip law target {target:.4e} not bracketed by [{lo:.4}, {hi:.4}]"),
    })?;
    Ok((phi, qubit_params_at(params, phi, grid)?))
}

/// Build the schedule on `s_points` uniformly spaced anneal fractions.
pub fn build_schedule(params: &FluxQubitParams, s_points: usize) -> Result<AnnealSchedule> {
    build_schedule_on(params, &FluxGrid::default(), s_points)
}

pub fn build_schedule_on(params: &FluxQubitParams, grid: &FluxGrid, s_points: usize) -> Result<AnnealSchedule> {
    params.validate()?;
    if s_points < 2 {
        return Err(invalid("s_points must be ≥ 2"));
    }
    let s_grid: Vec<f64> = (0..s_points)
        .map(|i| i as f64 / (s_points - 1) as f64)
        .collect();
    let rows: Vec<(f64, QubitParams)> = s_grid
        .par_iter()
        .map(|&s| solve_phi_cjj(params, grid, s))
        .collect::<Result<_>>()?;
    Ok(AnnealSchedule {
        a_ghz: rows.iter().map(|r| 0.5 * r.1.delta1).collect(),
        b_ghz: rows.iter().map(|r| params.b_from_ip(r.1.ip)).collect(),
        ip_amp: rows.iter().map(|r| r.1.ip).collect(),
        phi_cjj: rows.iter().map(|r| r.0).collect(),
        s_grid,
    })
}
