//! Product-state picture of the weak-strong pair: each cluster is one large
//! spin at z-magnetization q ∈ [−1, 1]. The resulting energy surface shows
//! the false minimum, the bifurcation of the true one, and the barrier
//! between them; an imaginary-momentum path under the barrier gives a
//! tunneling estimate of the gap.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::simpson;
use crate::roots::{brent, golden_max};
use crate::schedule::{fmt_sig, AnnealSchedule};
use crate::spectral::slice_at;
use crate::spin_model::WeakStrongSpec;

/// Energy surface U(q₁, q₂) at fixed transverse and longitudinal energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub spec: WeakStrongSpec,
    pub a_ghz: f64,
    pub b_ghz: f64,
}

impl Potential {
    pub fn new(spec: &WeakStrongSpec, schedule: &AnnealSchedule, s: f64) -> Self {
        let (a_ghz, b_ghz) = schedule.ab_at(s);
        Self {
            spec: *spec,
            a_ghz,
            b_ghz,
        }
    }

    fn n(&self) -> f64 {
        self.spec.n as f64
    }

    /// U in GHz.
    pub fn value(&self, q1: f64, q2: f64) -> f64 {
        let (n, a, b) = (self.n(), self.a_ghz, self.b_ghz);
        let WeakStrongSpec { h1, h2, j, .. } = self.spec;
        -n * a * ((1.0 - q1 * q1).sqrt() + (1.0 - q2 * q2).sqrt())
            - n * b * (h1 * q1 + j * n * q1 * q1 / 4.0 + h2 * q2 + j * n * q2 * q2 / 4.0)
            - 0.5 * n * b * j * q1 * q2
    }

    /// ∂U/∂q for |q| < 1.
    pub fn gradient(&self, q1: f64, q2: f64) -> [f64; 2] {
        let (n, a, b) = (self.n(), self.a_ghz, self.b_ghz);
        let WeakStrongSpec { h1, h2, j, .. } = self.spec;
        let kin = |q: f64| n * a * q / (1.0 - q * q).sqrt();
        [
            kin(q1) - n * b * (h1 + j * n * q1 / 2.0) - 0.5 * n * b * j * q2,
            kin(q2) - n * b * (h2 + j * n * q2 / 2.0) - 0.5 * n * b * j * q1,
        ]
    }

    /// Value, gradient and Hessian in the angle variables q = sin φ, where
    /// the surface is smooth up to the boundary.
    fn angular(&self, p: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let (n, a, b) = (self.n(), self.a_ghz, self.b_ghz);
        let WeakStrongSpec { h1, h2, j, .. } = self.spec;
        let (s1, c1) = p[0].sin_cos();
        let (s2, c2) = p[1].sin_cos();
        let u = self.value(s1, s2);
        // dU/dq at q = sin φ without the transverse part, then chain rule.
        let long1 = -n * b * (h1 + j * n * s1 / 2.0) - 0.5 * n * b * j * s2;
        let long2 = -n * b * (h2 + j * n * s2 / 2.0) - 0.5 * n * b * j * s1;
        let g = [n * a * s1 + long1 * c1, n * a * s2 + long2 * c2];
        let quad = -n * b * j * n / 2.0;
        let cross = -0.5 * n * b * j;
        let h11 = n * a * c1 + quad * c1 * c1 - long1 * s1;
        let h22 = n * a * c2 + quad * c2 * c2 - long2 * s2;
        let h12 = cross * c1 * c2;
        (u, g, [[h11, h12], [h12, h22]])
    }

    /// min over q₂ of U(q₁, q₂) and the minimizing q₂.
    pub fn relaxed(&self, q1: f64) -> (f64, f64) {
        let m = 64;
        let grid: Vec<f64> = (0..=m).map(|k| -1.0 + 2.0 * k as f64 / m as f64).collect();
        let best = grid
            .iter()
            .copied()
            .min_by(|x, y| self.value(q1, *x).total_cmp(&self.value(q1, *y)))
            .unwrap_or(0.0);
        let h = 2.0 / m as f64;
        let q2 = golden_max(|q| -self.value(q1, q), (best - h).max(-1.0), (best + h).min(1.0), 1e-12);
        (self.value(q1, q2), q2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub q1: f64,
    pub q2: f64,
    pub u: f64,
}

/// Local minima by damped Newton descent from a 21×21 grid of seeds.
pub fn find_minima(pot: &Potential) -> Vec<Minimum> {
    let seeds = 21;
    let half = 0.5 * std::f64::consts::PI;
    let mut found: Vec<[f64; 2]> = Vec::new();
    for i in 0..seeds {
        for k in 0..seeds {
            let at = |m: usize| -half * 0.98 + half * 1.96 * m as f64 / (seeds - 1) as f64;
            let Some(p) = newton_descent(pot, [at(i), at(k)]) else {
                continue;
            };
            if !found.iter().any(|f| (f[0] - p[0]).abs() + (f[1] - p[1]).abs() < 1e-6) {
                found.push(p);
            }
        }
    }
    let mut minima: Vec<Minimum> = found
        .into_iter()
        .map(|p| {
            let (q1, q2) = (p[0].sin(), p[1].sin());
            Minimum {
                q1,
                q2,
                u: pot.value(q1, q2),
            }
        })
        .collect();
    minima.sort_by(|a, b| a.u.total_cmp(&b.u));
    minima
}

/// Newton in angle variables, falling back to gradient steps where the
/// Hessian is not positive definite. Returns a strict local minimum or
/// nothing.
fn newton_descent(pot: &Potential, mut p: [f64; 2]) -> Option<[f64; 2]> {
    let half = 0.5 * std::f64::consts::PI;
    let scale = pot.n() * pot.n() * (pot.a_ghz + pot.b_ghz);
    for _ in 0..200 {
        let (u, g, h) = pot.angular(p);
        let gnorm = g[0].hypot(g[1]);
        if gnorm < 1e-13 * scale {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            return (h[0][0] > 0.0 && det > 0.0).then_some(p);
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if h[0][0] > 0.0 && det > 0.0 {
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
            ]
        } else {
            [-g[0] / scale, -g[1] / scale]
        };
        // Backtrack until the energy decreases.
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [(p[0] + step[0]).clamp(-half, half), (p[1] + step[1]).clamp(-half, half)];
            if pot.angular(trial).0 <= u {
                p = trial;
                accepted = true;
                break;
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !accepted {
            let (_, g, _) = pot.angular(p);
            return (g[0].hypot(g[1]) < 1e-9 * scale).then_some(p);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaSlice {
    pub s: f64,
    pub minima: Vec<Minimum>,
}

/// Minima along the anneal, grouped into continuous branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaPath {
    pub slices: Vec<MinimaSlice>,
    /// Per branch, per slice: index into that slice's minima.
    pub branches: Vec<Vec<Option<usize>>>,
    /// Barrier above the false minimum wherever two branches coexist, GHz.
    pub barrier: Vec<Option<f64>>,
    /// Where the false and true minima are degenerate.
    pub s_c: Option<f64>,
}

impl MinimaPath {
    /// The branch present at the first slice, which the system follows
    /// classically.
    pub fn false_branch(&self) -> Option<&Vec<Option<usize>>> {
        self.branches.first()
    }

    /// The branch that is the global minimum at the last slice, if it is not
    /// the false one.
    pub fn true_branch(&self) -> Option<&Vec<Option<usize>>> {
        let last = self.slices.len().checked_sub(1)?;
        self.branches.iter().skip(1).find(|b| b[last] == Some(0))
    }

    fn energy(&self, branch: &[Option<usize>], k: usize) -> Option<f64> {
        branch[k].map(|i| self.slices[k].minima[i].u)
    }
}

/// Minima on `s_grid`, tracked by nearest-neighbour matching.
pub fn track_minima(schedule: &AnnealSchedule, spec: &WeakStrongSpec, s_grid: &[f64]) -> Result<MinimaPath> {
    spec.validate()?;
    if s_grid.is_empty() {
        return Err(invalid("empty s grid"));
    }
    let slices: Vec<MinimaSlice> = s_grid
        .par_iter()
        .map(|&s| MinimaSlice {
            s,
            minima: find_minima(&Potential::new(spec, schedule, s)),
        })
        .collect();
    let mut branches: Vec<Vec<Option<usize>>> = Vec::new();
    for (k, slice) in slices.iter().enumerate() {
        let mut taken = vec![false; slice.minima.len()];
        for branch in branches.iter_mut() {
            let Some(Some(prev)) = (k > 0).then(|| branch[k - 1]) else {
                branch.push(None);
                continue;
            };
            let p = slices[k - 1].minima[prev];
            let nearest = slice
                .minima
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, m)| (i, (m.q1 - p.q1).hypot(m.q2 - p.q2)))
                .filter(|(_, d)| *d < 0.25)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            branch.push(nearest.map(|(i, _)| {
                taken[i] = true;
                i
            }));
        }
        for (i, t) in taken.iter().enumerate() {
            if !t {
                let mut b = vec![None; k];
                b.push(Some(i));
                branches.push(b);
            }
        }
    }
    let mut path = MinimaPath {
        barrier: vec![None; slices.len()],
        slices,
        branches,
        s_c: None,
    };
    let (Some(fb), Some(tb)) = (path.false_branch().cloned(), path.true_branch().cloned()) else {
        return Ok(path);
    };
    for k in 0..path.slices.len() {
        if let (Some(f), Some(t)) = (fb[k], tb[k]) {
            let m = &path.slices[k].minima;
            let pot = Potential::new(spec, schedule, path.slices[k].s);
            path.barrier[k] = Some(barrier_between(&pot, m[f].q1, m[t].q1) - m[f].u);
        }
    }
    for k in 1..path.slices.len() {
        let diff = |k: usize| Some(path.energy(&tb, k)? - path.energy(&fb, k)?);
        if let (Some(d0), Some(d1)) = (diff(k - 1), diff(k)) {
            if d0 > 0.0 && d1 <= 0.0 {
                let (s0, s1) = (path.slices[k - 1].s, path.slices[k].s);
                path.s_c = Some(s0 + (s1 - s0) * d0 / (d0 - d1));
                break;
            }
        }
    }
    Ok(path)
}

/// Highest point of the relaxed profile between two q₁ values.
pub fn barrier_between(pot: &Potential, qa: f64, qb: f64) -> f64 {
    let (lo, hi) = if qa < qb { (qa, qb) } else { (qb, qa) };
    let m = 200;
    let top = (0..=m)
        .map(|k| lo + (hi - lo) * k as f64 / m as f64)
        .max_by(|x, y| pot.relaxed(*x).0.total_cmp(&pot.relaxed(*y).0))
        .unwrap_or(lo);
    let h = (hi - lo) / m as f64;
    let q = golden_max(|q| pot.relaxed(q).0, (top - h).max(lo), (top + h).min(hi), 1e-10);
    pot.relaxed(q).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "ghz")]
pub enum AttemptRate {
    /// A fixed prefactor in GHz.
    Fixed(f64),
    /// E₂ − E₀ of the quantum model at the same s.
    Auto,
}

impl Default for AttemptRate {
    fn default() -> Self {
        AttemptRate::Fixed(3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantonResult {
    pub s: f64,
    /// ∫p dq between the turning points.
    pub action: f64,
    /// Planck-constant analogue 2/n of the cluster spin.
    pub epsilon: f64,
    pub attempt_rate_ghz: f64,
    pub gap_ghz: f64,
    pub q_a: f64,
    pub q_b: f64,
}

/// Tunneling gap estimate from the imaginary-momentum action along q₁ with
/// q₂ relaxed.
///
/// The weak cluster is a spin of size n/2, so ε = 2/n. The kinetic term of
/// the cluster is −nA√(1−q²)cos p, giving the effective mass scale
/// m(q) = nA√(1−q²) and |p(q)| = arccosh((V(q) − V(q_a))/m(q) + 1).
pub fn instanton_gap(spec: &WeakStrongSpec, schedule: &AnnealSchedule, s: f64, attempt: AttemptRate) -> Result<InstantonResult> {
    spec.validate()?;
    let pot = Potential::new(spec, schedule, s);
    let minima = find_minima(&pot);
    if minima.len() < 2 {
        return Err(Error::SingleWell { s });
    }
    // The false minimum has the weak cluster along its own field.
    let by_q1 = |sign: f64| {
        minima
            .iter()
            .filter(|m| m.q1 * sign * spec.h1.signum() > 0.0)
            .min_by(|a, b| a.u.total_cmp(&b.u))
            .copied()
    };
    let (Some(fm), Some(tm)) = (by_q1(1.0), by_q1(-1.0)) else {
        return Err(Error::SingleWell { s });
    };
    let v = |q: f64| pot.relaxed(q).0;
    let v_a = v(fm.q1);
    // The far turning point: where the relaxed profile comes back down to
    // V(q_a) on the true side, or the true minimum if it never does.
    let top = {
        let (lo, hi) = (fm.q1.min(tm.q1), fm.q1.max(tm.q1));
        let m = 200;
        (0..=m)
            .map(|k| lo + (hi - lo) * k as f64 / m as f64)
            .max_by(|x, y| v(*x).total_cmp(&v(*y)))
            .unwrap_or(lo)
    };
    if v(top) <= v_a {
        return Err(Error::SingleWell { s });
    }
    let q_b = brent(|q| Ok::<_, Error>(v(q) - v_a), top, tm.q1, 1e-12)?.unwrap_or(tm.q1);
    let n = spec.n as f64;
    let epsilon = 2.0 / n;
    let p = |q: f64| {
        let mass = n * pot.a_ghz * (1.0 - q * q).sqrt();
        let x = ((v(q) - v_a) / mass).max(0.0);
        (x + 1.0).acosh()
    };
    let action = simpson(p, fm.q1.min(q_b), fm.q1.max(q_b), 1e-10, 30).abs();
    let attempt_rate_ghz = match attempt {
        AttemptRate::Fixed(r) => r,
        AttemptRate::Auto => {
            let (slice, _) = slice_at(schedule, spec, s, 3)?;
            slice.energies[2] - slice.energies[0]
        }
    };
    Ok(InstantonResult {
        s,
        action,
        epsilon,
        attempt_rate_ghz,
        gap_ghz: attempt_rate_ghz * (-action / epsilon).exp(),
        q_a: fm.q1,
        q_b,
    })
}

/// U on a `points`×`points` grid over [−1, 1]², as `q1,q2,u_ghz`.
pub fn write_potential_csv<W: Write>(pot: &Potential, points: usize, w: W) -> Result<()> {
    if points < 2 {
        return Err(invalid("potential grid needs at least 2 points per axis"));
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q1", "q2", "u_ghz"])?;
    let at = |k: usize| -1.0 + 2.0 * k as f64 / (points - 1) as f64;
    for i in 0..points {
        for k in 0..points {
            let (q1, q2) = (at(i), at(k));
            wr.write_record([q1, q2, pot.value(q1, q2)].map(fmt_sig))?;
        }
    }
    wr.flush()?;
    Ok(())
}
