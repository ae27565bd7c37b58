//! Ising instances on Chimera-style cells, their text format, and the
//! susceptibility correction of fields and couplings.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A configuration with its energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub spins: Vec<i8>,
    pub energy: f64,
}

/// Ising problem `E(σ) = −Σ hᵢσᵢ − Σ Jᵢⱼσᵢσⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblem {
    pub h: Vec<f64>,
    /// Each pair once, with i < j.
    pub couplings: Vec<(usize, usize, f64)>,
    pub known_ground: Option<GroundState>,
    /// Spin groups that move together in the intended ground state; used
    /// for the cluster-level brute force.
    #[serde(default)]
    pub clusters: Vec<Vec<usize>>,
}

impl IsingProblem {
    pub fn new(h: Vec<f64>, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in couplings {
            if i == j {
                return Err(invalid(format!("self-coupling on spin {i}")));
            }
            let key = (i.min(j), i.max(j));
            *merged.entry(key).or_insert(0.0) += v;
        }
        let p = Self {
            h,
            couplings: merged.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
            known_ground: None,
            clusters: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_spins(&self) -> usize {
        self.h.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_spins();
        for (i, h) in self.h.iter().enumerate() {
            if !(h.abs() <= 1.0) {
                return Err(invalid(format!("field h[{i}] = {h} outside [-1, 1]")));
            }
        }
        for &(i, j, v) in &self.couplings {
            if i >= n || j >= n || i == j {
                return Err(invalid(format!("bad coupling ({i}, {j})")));
            }
            if !(v.abs() <= 1.0) {
                return Err(invalid(format!("coupling J[{i},{j}] = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let field: f64 = self.h.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
        let bonds: f64 = self
            .couplings
            .iter()
            .map(|&(i, j, v)| v * (spins[i] * spins[j]) as f64)
            .sum();
        -field - bonds
    }

    /// Neighbour lists `(j, J_ij)` per spin.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_spins()];
        for &(i, j, v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    /// Lowest energy over configurations where every cluster is uniformly
    /// aligned, by Gray-code enumeration.
    pub fn cluster_brute_force(&self) -> Result<GroundState> {
        let k = self.clusters.len();
        if k == 0 || k > 30 {
            return Err(invalid(format!("cluster brute force needs 1..=30 clusters, got {k}")));
        }
        let mut owner = vec![usize::MAX; self.num_spins()];
        for (c, members) in self.clusters.iter().enumerate() {
            for &m in members {
                owner[m] = c;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(invalid("clusters must cover every spin"));
        }
        // Reduce to a k-spin problem: E = const − Σ f_c s_c − Σ K_cd s_c s_d.
        let mut field = vec![0.0; k];
        let mut constant = 0.0;
        let mut pair = vec![vec![0.0; k]; k];
        for (i, h) in self.h.iter().enumerate() {
            field[owner[i]] += h;
        }
        for &(i, j, v) in &self.couplings {
            let (a, b) = (owner[i], owner[j]);
            if a == b {
                constant -= v;
            } else {
                pair[a][b] += v;
                pair[b][a] += v;
            }
        }
        let mut s = vec![1i8; k];
        let energy_of = |s: &[i8]| -> f64 {
            let mut e = constant;
            for a in 0..k {
                e -= field[a] * s[a] as f64;
                for b in (a + 1)..k {
                    e -= pair[a][b] * (s[a] * s[b]) as f64;
                }
            }
            e
        };
        let mut e = energy_of(&s);
        let (mut best_e, mut best) = (e, s.clone());
        for step in 1u64..(1u64 << k) {
            let flip = step.trailing_zeros() as usize;
            // ΔE for s_flip → −s_flip.
            let local: f64 = field[flip] + (0..k).map(|b| pair[flip][b] * s[b] as f64).sum::<f64>();
            e += 2.0 * local * s[flip] as f64;
            s[flip] = -s[flip];
            if e < best_e - 1e-12 {
                best_e = e;
                best.clone_from(&s);
            }
        }
        let mut spins = vec![0i8; self.num_spins()];
        for (i, o) in owner.iter().enumerate() {
            spins[i] = best[*o];
        }
        let energy = self.energy(&spins);
        Ok(GroundState { spins, energy })
    }

    /// Text form: the spin count, then `h i v` and `J i j v` lines.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.num_spins())?;
        for (i, h) in self.h.iter().enumerate() {
            if *h != 0.0 {
                writeln!(w, "h {i} {h}")?;
            }
        }
        for &(i, j, v) in &self.couplings {
            writeln!(w, "J {i} {j} {v}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut n = None;
        let mut h = Vec::new();
        let mut couplings = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |detail: String| Error::Parse { line: k + 1, detail };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some(count) = n else {
                let count: usize = fields[0].parse().map_err(|_| parse_err(format!("expected spin count, got {line:?}")))?;
                n = Some(count);
                h = vec![0.0; count];
                continue;
            };
            let idx = |s: &str| -> Result<usize> {
                let i: usize = s.parse().map_err(|_| parse_err(format!("bad index {s:?}")))?;
                if i >= count {
                    return Err(parse_err(format!("index {i} out of range")));
                }
                Ok(i)
            };
            let val = |s: &str| -> Result<f64> { s.parse().map_err(|_| parse_err(format!("bad value {s:?}"))) };
            match fields.as_slice() {
                ["h", i, v] => h[idx(i)?] = val(v)?,
                ["J", i, j, v] => couplings.push((idx(i)?, idx(j)?, val(v)?)),
                _ => return Err(parse_err(format!("unrecognized line {line:?}"))),
            }
        }
        if n.is_none() {
            return Err(Error::Parse {
                line: 0,
                detail: "empty problem file".into(),
            });
        }
        Self::new(h, couplings)
    }
}

/// Apply the background-susceptibility correction:
/// `h' = h − χ J h`, `J' = J − 2χ J²` (off-diagonal part).
pub fn chi_correct(problem: &IsingProblem, chi: f64) -> Result<IsingProblem> {
    if !(chi >= 0.0) {
        return Err(invalid("chi must be non-negative"));
    }
    if chi == 0.0 {
        return Ok(problem.clone());
    }
    let adj = problem.adjacency();
    let h: Vec<f64> = (0..problem.num_spins())
        .map(|i| problem.h[i] - chi * adj[i].iter().map(|&(j, v)| v * problem.h[j]).sum::<f64>())
        .collect();
    let mut j2: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, v) in &problem.couplings {
        j2.insert((i, j), v);
    }
    // Two-hop paths i − k − j through every middle spin k.
    for nbrs in &adj {
        for (a, &(i, vi)) in nbrs.iter().enumerate() {
            for &(j, vj) in &nbrs[a + 1..] {
                let key = (i.min(j), i.max(j));
                *j2.entry(key).or_insert(0.0) -= 2.0 * chi * vi * vj;
            }
        }
    }
    let couplings = j2.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect();
    Ok(IsingProblem {
        h,
        couplings,
        known_ground: problem.known_ground.clone(),
        clusters: problem.clusters.clone(),
    })
}

/// Instance families built from 2·`half`-qubit Chimera cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemKind {
    WeakStrongPair { h1: f64 },
    /// `count` weak-strong pairs, weak cells chained ferromagnetically.
    Stacked { count: usize, h1: f64 },
    /// `rows` rows of five cells: two weak-strong pairs and a lone strong
    /// cell each; neighbouring strong cells share a random-sign bundle.
    Glass { rows: usize, h1: f64 },
    /// A weak-strong pair with a ferromagnetic tail on every cell.
    ChiProbe { h1: f64 },
}

const CELL: usize = 8;
const HALF: usize = CELL / 2;

/// Cell geometry: column 0 couples vertically, column 1 horizontally.
struct Layout {
    cells: usize,
    h: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

impl Layout {
    fn new(cells: usize) -> Self {
        let mut l = Self {
            cells,
            h: vec![0.0; cells * CELL],
            couplings: Vec::new(),
        };
        for c in 0..cells {
            for r in 0..HALF {
                for t in 0..HALF {
                    l.couplings.push((l.qubit(c, 0, r), l.qubit(c, 1, t), 1.0));
                }
            }
        }
        l
    }

    fn qubit(&self, cell: usize, col: usize, r: usize) -> usize {
        cell * CELL + col * HALF + r
    }

    fn field(&mut self, cell: usize, h: f64) {
        for q in cell * CELL..(cell + 1) * CELL {
            self.h[q] = h;
        }
    }

    fn horizontal(&mut self, left: usize, right: usize, j: f64) {
        for r in 0..HALF {
            self.couplings.push((self.qubit(left, 1, r), self.qubit(right, 1, r), j));
        }
    }

    fn vertical(&mut self, top: usize, bottom: usize, j: f64) {
        for r in 0..HALF {
            self.couplings.push((self.qubit(top, 0, r), self.qubit(bottom, 0, r), j));
        }
    }

    fn finish(self) -> Result<IsingProblem> {
        let clusters = (0..self.cells).map(|c| (c * CELL..(c + 1) * CELL).collect()).collect();
        let mut p = IsingProblem::new(self.h, self.couplings)?;
        p.clusters = clusters;
        Ok(p)
    }
}

const STRONG: f64 = -1.0;

/// Build an instance and fill `known_ground` by cluster brute force.
pub fn generate_problem(kind: &ProblemKind, seed: u64) -> Result<IsingProblem> {
    let check_h1 = |h1: f64| {
        if !(h1.abs() <= 1.0) {
            return Err(invalid(format!("h1 = {h1} outside [-1, 1]")));
        }
        Ok(())
    };
    let mut p = match *kind {
        ProblemKind::WeakStrongPair { h1 } => {
            check_h1(h1)?;
            let mut l = Layout::new(2);
            l.field(0, h1);
            l.field(1, STRONG);
            l.horizontal(0, 1, 1.0);
            l.finish()?
        }
        ProblemKind::Stacked { count, h1 } => {
            check_h1(h1)?;
            if count == 0 || 2 * count > 30 {
                return Err(invalid(format!("stack count must be in 1..=15, got {count}")));
            }
            let mut l = Layout::new(2 * count);
            for k in 0..count {
                l.field(2 * k, h1);
                l.field(2 * k + 1, STRONG);
                l.horizontal(2 * k, 2 * k + 1, 1.0);
                if k > 0 {
                    l.vertical(2 * (k - 1), 2 * k, 1.0);
                }
            }
            l.finish()?
        }
        ProblemKind::Glass { rows, h1 } => {
            check_h1(h1)?;
            if rows == 0 || rows > 6 {
                return Err(invalid(format!("glass rows must be in 1..=6, got {rows}")));
            }
            let cols = 5;
            let strong_col = [false, true, false, true, true];
            let mut l = Layout::new(rows * cols);
            let cell = |r: usize, c: usize| r * cols + c;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sign = || if rng.random::<bool>() { 1.0 } else { -1.0 };
            for r in 0..rows {
                for c in 0..cols {
                    l.field(cell(r, c), if strong_col[c] { STRONG } else { h1 });
                }
                for c in [0, 2] {
                    l.horizontal(cell(r, c), cell(r, c + 1), 1.0);
                }
                l.horizontal(cell(r, 3), cell(r, 4), sign());
            }
            for r in 1..rows {
                for c in 0..cols {
                    if strong_col[c] {
                        l.vertical(cell(r - 1, c), cell(r, c), sign());
                    }
                }
            }
            l.finish()?
        }
        ProblemKind::ChiProbe { h1 } => {
            check_h1(h1)?;
            let mut l = Layout::new(2);
            l.field(0, h1);
            l.field(1, STRONG);
            l.horizontal(0, 1, 1.0);
            // Four-spin tails hanging off the first vertical qubit of each
            // cell; they carry no field and join their cell's cluster.
            let tail = 4;
            let base = l.h.len();
            l.h.extend(std::iter::repeat_n(0.0, 2 * tail));
            let mut clusters: Vec<Vec<usize>> = (0..2).map(|c| (c * CELL..(c + 1) * CELL).collect()).collect();
            for c in 0..2 {
                let mut prev = l.qubit(c, 0, 0);
                for t in 0..tail {
                    let q = base + c * tail + t;
                    l.couplings.push((prev, q, 1.0));
                    clusters[c].push(q);
                    prev = q;
                }
            }
            let mut p = IsingProblem::new(l.h, l.couplings)?;
            p.clusters = clusters;
            p
        }
    };
    p.known_ground = Some(p.cluster_brute_force()?);
    Ok(p)
}
