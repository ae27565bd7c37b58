//! The weak-strong cluster Hamiltonian.
//!
//! Two Chimera cells of `n` qubits each. A cell is a complete bipartite
//! graph between its two columns of `n/2` qubits; the second columns of the
//! two cells are joined one-to-one by `n/2` inter-cell bonds. The sign
//! convention is
//!
//! `H(s) = −A(s) Σ σˣ + B(s) (−Σ h σᶻ − Σ J σᶻσᶻ)`
//!
//! so a single qubit has splitting 2A at B = 0.
//!
//! Because the driver and the intra-cell terms are symmetric under
//! permutations within a column, the low-energy physics lives in the sector
//! of maximal column spin `n/4`. [`build_subspace_hamiltonian`] works there,
//! with the inter-cell bonds approximated by `−(8J/n) S^z S^z` between the
//! two inner columns. [`build_exact_hamiltonian`] is the full `2^(2n)`
//! operator.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{lanczos_lowest, symmetric_eigen, LanczosOptions, LinearOperator, SparseSymmetric, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakStrongSpec {
    /// Qubits per cell.
    pub n: usize,
    /// Field on the weak (left) cell.
    pub h1: f64,
    /// Field on the strong (right) cell.
    pub h2: f64,
    /// Ferromagnetic coupling, intra- and inter-cell.
    pub j: f64,
}

impl Default for WeakStrongSpec {
    fn default() -> Self {
        Self {
            n: 8,
            h1: 0.44,
            h2: -1.0,
            j: 1.0,
        }
    }
}

impl WeakStrongSpec {
    pub fn with_h1(h1: f64) -> Self {
        Self { h1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 4 != 0 {
            return Err(invalid(format!("cell size must be a positive multiple of 4, got {}", self.n)));
        }
        for (name, v) in [("h1", self.h1), ("h2", self.h2), ("j", self.j)] {
            if !(v.abs() <= 1.0) {
                return Err(invalid(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Total qubit count 2n.
    pub fn qubits(&self) -> usize {
        2 * self.n
    }

    pub fn column_qubits(&self) -> usize {
        self.n / 2
    }

    /// Column spin S = n/4.
    pub fn column_spin(&self) -> f64 {
        self.n as f64 / 4.0
    }

    /// Energy of the false minimum (left cell against its field, aligned
    /// with the strong cell) above the true one at A = 0, in units of B:
    /// `2n(J/2 − h1)`.
    pub fn classical_gap(&self) -> f64 {
        2.0 * self.n as f64 * (0.5 * self.j - self.h1.abs())
    }

    /// Column index (0..4) of qubit μ, in the order (1,1), (1,2), (2,1), (2,2).
    pub fn column_of(&self, qubit: usize) -> usize {
        qubit / self.column_qubits()
    }

    /// Field on qubit μ.
    pub fn field_of(&self, qubit: usize) -> f64 {
        if qubit < self.n {
            self.h1
        } else {
            self.h2
        }
    }

    /// Coupler list `(μ, ν, J)` of the full graph.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let half = self.column_qubits();
        let mut out = Vec::with_capacity(self.n * self.n / 2 + half);
        for cell in 0..2 {
            let base = cell * self.n;
            for r in 0..half {
                for t in 0..half {
                    out.push((base + r, base + half + t, self.j));
                }
            }
        }
        for r in 0..half {
            out.push((half + r, self.n + half + r, self.j));
        }
        out
    }
}

/// Basis of the maximal-column-spin sector. Each of the four columns
/// carries a projection `m ∈ {−S, …, S}`; states are ordered
/// lexicographically in (m₁₁, m₁₂, m₂₁, m₂₂) with m₂₂ fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubspaceBasis {
    levels: usize,
}

impl SubspaceBasis {
    pub fn new(n: usize) -> Self {
        Self { levels: n / 2 + 1 }
    }

    /// 2S + 1 projections per column.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.pow(4)
    }

    pub fn spin(&self) -> f64 {
        (self.levels - 1) as f64 / 2.0
    }

    pub fn index(&self, digits: [usize; 4]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.levels + d)
    }

    pub fn digits(&self, mut index: usize) -> [usize; 4] {
        let mut out = [0; 4];
        for slot in out.iter_mut().rev() {
            *slot = index % self.levels;
            index /= self.levels;
        }
        out
    }

    /// Projections (m₁₁, m₁₂, m₂₁, m₂₂) of a basis state.
    pub fn projections(&self, index: usize) -> [f64; 4] {
        self.digits(index).map(|d| d as f64 - self.spin())
    }

    /// Diagonal of S^z for one column.
    pub fn column_sz(&self, column: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.projections(i)[column]).collect()
    }

    /// ⟨m+1|S⁺|m⟩
    pub fn raising(&self, m: f64) -> f64 {
        let s = self.spin();
        (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

/// Subspace Hamiltonian in GHz at the given schedule energies.
pub fn build_subspace_hamiltonian(spec: &WeakStrongSpec, a_ghz: f64, b_ghz: f64) -> Result<SymMatrix> {
    spec.validate()?;
    let basis = SubspaceBasis::new(spec.n);
    let dim = basis.dim();
    let (j, h1, h2) = (spec.j, spec.h1, spec.h2);
    let inter = 8.0 * j / spec.n as f64;
    let mut h = SymMatrix::zeros(dim);
    for i in 0..dim {
        let [m11, m12, m21, m22] = basis.projections(i);
        let problem = -4.0 * j * (m11 * m12 + m21 * m22)
            - 2.0 * h1 * (m11 + m12)
            - 2.0 * h2 * (m21 + m22)
            - inter * m12 * m22;
        h.set(i, i, b_ghz * problem);
        // −2A Sˣ = −A (S⁺ + S⁻); add each raising element once.
        let digits = basis.digits(i);
        for col in 0..4 {
            if digits[col] + 1 < basis.levels() {
                let mut up = digits;
                up[col] += 1;
                let el = -a_ghz * basis.raising(basis.projections(i)[col]);
                h.add_sym(basis.index(up), i, el);
            }
        }
    }
    Ok(h)
}

/// Largest system [`build_exact_hamiltonian`] will allocate.
pub const EXACT_MAX_QUBITS: usize = 24;

/// Full Hamiltonian on 2^(2n) states. Bit μ of a basis index is qubit μ;
/// a clear bit means σᶻ = +1.
pub fn build_exact_hamiltonian(spec: &WeakStrongSpec, a_ghz: f64, b_ghz: f64) -> Result<SparseSymmetric> {
    spec.validate()?;
    let nq = spec.qubits();
    if nq > EXACT_MAX_QUBITS {
        return Err(Error::SizeGuard(format!(
            "{nq} qubits exceed the exact-model limit of {EXACT_MAX_QUBITS}"
        )));
    }
    let bonds = spec.bonds();
    let fields: Vec<f64> = (0..nq).map(|q| spec.field_of(q)).collect();
    let dim = 1usize << nq;
    let rows: Vec<Vec<(u32, f64)>> = (0..dim)
        .into_par_iter()
        .map(|state| {
            let sigma = |q: usize| if state >> q & 1 == 0 { 1.0 } else { -1.0 };
            let mut e = 0.0;
            for (q, h) in fields.iter().enumerate() {
                e -= h * sigma(q);
            }
            for &(p, q, jv) in &bonds {
                e -= jv * sigma(p) * sigma(q);
            }
            let mut row = Vec::with_capacity(nq + 1);
            row.push((state as u32, b_ghz * e));
            if a_ghz != 0.0 {
                for q in 0..nq {
                    row.push(((state ^ (1 << q)) as u32, -a_ghz));
                }
            }
            row
        })
        .collect();
    Ok(SparseSymmetric::from_rows(rows))
}

/// Single-qubit σᶻ expectation for every qubit of an exact-model state.
pub fn exact_magnetizations(spec: &WeakStrongSpec, state: &[f64]) -> Vec<f64> {
    let nq = spec.qubits();
    let mut out = vec![0.0; nq];
    for (idx, amp) in state.iter().enumerate() {
        let p = amp * amp;
        for (q, m) in out.iter_mut().enumerate() {
            *m += if idx >> q & 1 == 0 { p } else { -p };
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMode {
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Dense operators above this size are refused in dense mode.
const DENSE_LIMIT: usize = 4096;

/// `k` lowest eigenpairs. Dense mode materializes the operator and runs the
/// full tridiagonal QL solve; sparse mode runs Lanczos.
pub fn lowest_eigs<O: LinearOperator + ?Sized>(op: &O, k: usize, mode: EigenMode) -> Result<Eigenpairs> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(invalid(format!("cannot take {k} eigenpairs of a {dim}-dimensional operator")));
    }
    match mode {
        EigenMode::Dense => {
            if dim > DENSE_LIMIT {
                return Err(Error::SizeGuard(format!("dense solve of dimension {dim}")));
            }
            let m = materialize(op);
            let (mut values, mut vectors) = symmetric_eigen(&m)?;
            values.truncate(k);
            vectors.truncate(k);
            Ok(Eigenpairs { values, vectors })
        }
        EigenMode::Sparse => {
            let opts = LanczosOptions {
                max_iter: 400,
                ..LanczosOptions::default()
            };
            let r = lanczos_lowest(op, k, &opts)?;
            Ok(Eigenpairs {
                values: r.values,
                vectors: r.vectors,
            })
        }
    }
}

fn materialize<O: LinearOperator + ?Sized>(op: &O) -> SymMatrix {
    let n = op.dim();
    let mut m = SymMatrix::zeros(n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for (i, v) in col.iter().enumerate() {
            m.set(i, j, *v);
        }
        e[j] = 0.0;
    }
    m
}

/// Coordinate dump, one `row col value` line per stored entry.
pub fn write_operator_dump<W: Write>(triplets: impl IntoIterator<Item = (usize, usize, f64)>, mut w: W) -> Result<()> {
    for (r, c, v) in triplets {
        if v != 0.0 {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
    }
    Ok(())
}
