//! Spectral slices of the subspace Hamiltonian and the pointer basis.
//!
//! At each anneal fraction the two lowest eigenstates ψ₀, ψ₁ define, for
//! every qubit μ, a real 2×2 block `Z_μ^{γγ'} = ⟨ψ_γ|σᶻ_μ|ψ_γ'⟩`. The
//! pointer basis is the rotation of (ψ₀, ψ₁) by angle θ that maximizes the
//! mean Hamming distance h(θ) between the two rotated states.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{lanczos_lowest, LanczosOptions, SparseSymmetric, SymMatrix};
use crate::noise::NoiseModel;
use crate::roots::golden_max;
use crate::schedule::{fmt_sig, AnnealSchedule};
use crate::spin_model::{build_subspace_hamiltonian, SubspaceBasis, WeakStrongSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSlice {
    pub s: f64,
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// E₁ − E₀, GHz.
    pub omega10: f64,
    /// Set when the lowest pair was degenerate to 1e-12 GHz and had to be
    /// labelled by polarization.
    pub degenerate: bool,
}

/// One 2×2 block `[[Z⁰⁰, Z⁰¹], [Z¹⁰, Z¹¹]]` per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct ZElements {
    pub blocks: Vec<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCoefficients {
    /// Overlap factor ¼Σ|Z¹⁰|².
    pub a: f64,
    /// Mean Hamming distance ¼Σ|Z¹¹ − Z⁰⁰|².
    pub h: f64,
    /// ¼Σ[(Z¹¹)² − (Z⁰⁰)²]
    pub d: f64,
    /// ¼ΣZ¹⁰(Z¹¹ + Z⁰⁰)
    pub c_plus: f64,
    /// ¼ΣZ¹⁰(Z¹¹ − Z⁰⁰)
    pub c_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerQuantities {
    pub s: f64,
    pub theta_star: f64,
    pub omega10: f64,
    /// Pointer splitting with the reorganization shift, Ω₁₀* − ε_p d*.
    pub omega: f64,
    pub omega10_star: f64,
    pub delta_star: f64,
    pub eps_p: f64,
    pub coeffs: BasisCoefficients,
}

/// Dimension above which slices are diagonalized with Lanczos.
const DENSE_SLICE_LIMIT: usize = 128;

/// Diagonalize the subspace Hamiltonian at `s` and collect its σᶻ blocks.
pub fn slice_at(schedule: &AnnealSchedule, spec: &WeakStrongSpec, s: f64, k: usize) -> Result<(EigenSlice, ZElements)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s = {s} outside [0, 1]")));
    }
    if k < 2 {
        return Err(invalid("a slice needs at least two levels"));
    }
    let (a, b) = schedule.ab_at(s);
    let h = build_subspace_hamiltonian(spec, a, b)?;
    let (energies, mut vectors) = lowest_pairs(&h, k)?;
    let basis = SubspaceBasis::new(spec.n);
    let sz: Vec<Vec<f64>> = (0..4).map(|c| basis.column_sz(c)).collect();
    let mut degenerate = false;
    if energies[1] - energies[0] < 1e-12 {
        degenerate = true;
        let total = |v: &[f64]| -> f64 {
            sz.iter()
                .map(|col| v.iter().zip(col).map(|(x, m)| x * x * m).sum::<f64>())
                .sum()
        };
        if total(&vectors[1]) < total(&vectors[0]) {
            vectors.swap(0, 1);
        }
    }
    let scale = 4.0 / spec.n as f64;
    let mut per_column = [[[0.0; 2]; 2]; 4];
    for (c, col) in sz.iter().enumerate() {
        for g in 0..2 {
            for gp in 0..2 {
                per_column[c][g][gp] = scale
                    * vectors[g]
                        .iter()
                        .zip(&vectors[gp])
                        .zip(col)
                        .map(|((x, y), m)| x * y * m)
                        .sum::<f64>();
            }
        }
    }
    let blocks = (0..spec.qubits()).map(|q| per_column[spec.column_of(q)]).collect();
    let omega10 = (energies[1] - energies[0]).max(0.0);
    Ok((
        EigenSlice {
            s,
            energies,
            vectors,
            omega10,
            degenerate,
        },
        ZElements { blocks },
    ))
}

fn lowest_pairs(h: &SymMatrix, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = h.dim();
    if dim <= DENSE_SLICE_LIMIT {
        let (mut values, mut vectors) = crate::linalg::symmetric_eigen(h)?;
        values.truncate(k);
        vectors.truncate(k);
        return Ok((values, vectors));
    }
    let rows: Vec<Vec<(u32, f64)>> = (0..dim)
        .map(|i| {
            (0..dim)
                .filter_map(|j| {
                    let v = h.get(i, j);
                    (v != 0.0).then_some((j as u32, v))
                })
                .collect()
        })
        .collect();
    let sparse = SparseSymmetric::from_rows(rows);
    let opts = LanczosOptions {
        max_iter: dim,
        ..LanczosOptions::default()
    };
    let r = lanczos_lowest(&sparse, k, &opts)?;
    Ok((r.values, r.vectors))
}

pub fn basis_coefficients(z: &ZElements) -> BasisCoefficients {
    let mut c = BasisCoefficients {
        a: 0.0,
        h: 0.0,
        d: 0.0,
        c_plus: 0.0,
        c_minus: 0.0,
    };
    for b in &z.blocks {
        let (z00, z10, z11) = (b[0][0], b[1][0], b[1][1]);
        c.a += z10 * z10;
        c.h += (z11 - z00).powi(2);
        c.d += z11 * z11 - z00 * z00;
        c.c_plus += z10 * (z11 + z00);
        c.c_minus += z10 * (z11 - z00);
    }
    c.a /= 4.0;
    c.h /= 4.0;
    c.d /= 4.0;
    c.c_plus /= 4.0;
    c.c_minus /= 4.0;
    c
}

/// Columns of the 2×2 rotation taking (ψ₀, ψ₁) to the rotated pair:
/// `φ₀ = −cos α ψ₀ − sin α ψ₁`, `φ₁ = sin α ψ₀ − cos α ψ₁`, α = θ/2 − π/4.
fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (0.5 * theta - 0.25 * PI).sin_cos();
    [[-c, s], [-s, -c]]
}

/// σᶻ blocks in the basis rotated by `theta`.
pub fn rotate(z: &ZElements, theta: f64) -> ZElements {
    let r = rotation(theta);
    let blocks = z
        .blocks
        .iter()
        .map(|b| {
            let mut out = [[0.0; 2]; 2];
            for g in 0..2 {
                for gp in 0..2 {
                    let mut acc = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            acc += r[p][g] * b[p][q] * r[q][gp];
                        }
                    }
                    out[g][gp] = acc;
                }
            }
            out
        })
        .collect();
    ZElements { blocks }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub value: f64,
    /// The objective was flat; `theta` is the seed.
    pub degenerate: bool,
}

const GRID: usize = 64;

/// Maximize a π-periodic objective of θ: 64-point scan, then golden section
/// to 1e-10 rad. With a seed, the local maximum reached by climbing from
/// the seed wins over the global grid maximum.
pub fn maximize_periodic<F: Fn(f64) -> f64>(objective: F, seed: Option<f64>) -> Rotation {
    let step = PI / GRID as f64;
    let values: Vec<f64> = (0..GRID).map(|i| objective(i as f64 * step)).collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo < 1e-14 {
        let theta = seed.unwrap_or(PI / 2.0).rem_euclid(PI);
        return Rotation {
            theta,
            value: objective(theta),
            degenerate: true,
        };
    }
    let at = |i: isize| values[i.rem_euclid(GRID as isize) as usize];
    let mut best = match seed {
        Some(t) => (t.rem_euclid(PI) / step).round() as isize,
        None => (0..GRID)
            .max_by(|&x, &y| values[x].total_cmp(&values[y]))
            .unwrap_or(0) as isize,
    };
    // Climb to the neighbouring local maximum.
    for _ in 0..GRID {
        if at(best + 1) > at(best) {
            best += 1;
        } else if at(best - 1) > at(best) {
            best -= 1;
        } else {
            break;
        }
    }
    let center = best as f64 * step;
    let theta = golden_max(&objective, center - step, center + step, 1e-10);
    let theta = theta.rem_euclid(PI);
    Rotation {
        theta,
        value: objective(theta),
        degenerate: false,
    }
}

/// θ* maximizing the mean Hamming distance.
pub fn optimal_rotation(z: &ZElements, seed: Option<f64>) -> Rotation {
    maximize_periodic(|t| basis_coefficients(&rotate(z, t)).h, seed)
}

pub fn pointer_quantities(slice: &EigenSlice, z: &ZElements, theta_star: f64, eps_p: f64) -> Result<PointerQuantities> {
    if !(eps_p >= 0.0) {
        return Err(invalid("eps_p must be non-negative"));
    }
    let coeffs = basis_coefficients(&rotate(z, theta_star));
    let omega10_star = slice.omega10 * theta_star.sin();
    Ok(PointerQuantities {
        s: slice.s,
        theta_star,
        omega10: slice.omega10,
        omega: omega10_star - eps_p * coeffs.d,
        omega10_star,
        delta_star: -slice.omega10 * theta_star.cos(),
        eps_p,
        coeffs,
    })
}

/// Everything known about one anneal fraction.
#[derive(Debug, Clone)]
pub struct SliceRecord {
    pub slice: EigenSlice,
    pub z: ZElements,
    pub rotation: Rotation,
    pub pointer: PointerQuantities,
}

/// Slices over `s_grid` with θ* continued from one point to the next.
/// Diagonalization runs in parallel; the θ* pass is sequential. With a noise
/// model, ε_p(s) enters Ω; otherwise ε_p = 0.
pub fn scan(
    schedule: &AnnealSchedule,
    spec: &WeakStrongSpec,
    s_grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<Vec<SliceRecord>> {
    let slices: Vec<(EigenSlice, ZElements)> = s_grid
        .par_iter()
        .map(|&s| slice_at(schedule, spec, s, 3))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(slices.len());
    let mut seed = None;
    for (slice, z) in slices {
        let rotation = optimal_rotation(&z, seed);
        seed = Some(rotation.theta);
        let eps_p = noise.map_or(0.0, |m| crate::noise::noise_at(m, schedule, slice.s).eps_p);
        let pointer = pointer_quantities(&slice, &z, rotation.theta, eps_p)?;
        out.push(SliceRecord {
            slice,
            z,
            rotation,
            pointer,
        });
    }
    Ok(out)
}

pub const SLICE_HEADER: [&str; 12] = [
    "s",
    "E0",
    "E1",
    "omega10",
    "theta_star",
    "a_star",
    "h_star",
    "d_star",
    "cplus_star",
    "cminus_star",
    "omega",
    "delta_star",
];

pub fn write_slice_csv<W: Write>(records: &[SliceRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SLICE_HEADER)?;
    for r in records {
        let p = &r.pointer;
        let c = &p.coeffs;
        wr.write_record(
            [
                p.s,
                r.slice.energies[0],
                r.slice.energies[1],
                p.omega10,
                p.theta_star,
                c.a,
                c.h,
                c.d,
                c.c_plus,
                c.c_minus,
                p.omega,
                p.delta_star,
            ]
            .map(fmt_sig),
        )?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinGap {
    pub s: f64,
    pub gap: f64,
    /// E₂ − E₀ at the same point.
    pub second_gap: f64,
}

/// Minimum of E₁ − E₀ over [lo, hi]: a `points`-node scan, then golden
/// section around the best node.
pub fn min_gap(schedule: &AnnealSchedule, spec: &WeakStrongSpec, lo: f64, hi: f64, points: usize) -> Result<MinGap> {
    if !(lo < hi) || points < 3 {
        return Err(invalid("min_gap needs lo < hi and at least 3 points"));
    }
    let gap = |s: f64| slice_at(schedule, spec, s, 3).map(|(sl, _)| sl);
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let gaps: Vec<f64> = grid
        .par_iter()
        .map(|&s| gap(s).map(|sl| sl.omega10))
        .collect::<Result<_>>()?;
    let best = (0..points).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap_or(0);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(points - 1)];
    let s = golden_max(|s| gap(s).map_or(f64::NEG_INFINITY, |sl| -sl.omega10), a, b, 1e-7);
    let sl = gap(s)?;
    Ok(MinGap {
        s,
        gap: sl.omega10,
        second_gap: sl.energies[2] - sl.energies[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_z() -> ZElements {
        ZElements {
            blocks: vec![
                [[0.3, -0.4], [-0.4, -0.7]],
                [[0.9, 0.1], [0.1, 0.2]],
                [[-0.2, 0.5], [0.5, 0.6]],
            ],
        }
    }

    fn qubit_z(theta_adiabatic: f64) -> ZElements {
        // Single qubit: ψ₀, ψ₁ rotated from |↑⟩, |↓⟩.
        let (s, c) = theta_adiabatic.sin_cos();
        ZElements {
            blocks: vec![[[c, s], [s, -c]]],
        }
    }

    #[test]
    fn half_pi_is_identity() {
        let z = sample_z();
        let r = rotate(&z, PI / 2.0);
        for (a, b) in z.blocks.iter().zip(&r.blocks) {
            for g in 0..2 {
                for gp in 0..2 {
                    assert!((a[g][gp] - b[g][gp]).abs() < 1e-15);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rotation_preserves_trace(theta in 0.0f64..PI) {
            let z = sample_z();
            let r = rotate(&z, theta);
            for (a, b) in z.blocks.iter().zip(&r.blocks) {
                prop_assert!(((a[0][0] + a[1][1]) - (b[0][0] + b[1][1])).abs() < 1e-12);
                prop_assert!((b[0][1] - b[1][0]).abs() < 1e-15);
            }
        }

        #[test]
        fn hamming_is_pi_periodic(theta in 0.0f64..PI) {
            let z = sample_z();
            let h0 = basis_coefficients(&rotate(&z, theta)).h;
            let h1 = basis_coefficients(&rotate(&z, theta + PI)).h;
            prop_assert!((h0 - h1).abs() < 1e-12);
        }

        #[test]
        fn pythagorean_identity(theta in 0.0f64..PI, gap in 0.0f64..5.0) {
            let slice = EigenSlice { s: 0.3, energies: vec![0.0, gap], vectors: vec![], omega10: gap, degenerate: false };
            let p = pointer_quantities(&slice, &sample_z(), theta, 0.1).unwrap();
            prop_assert!((p.omega10_star.powi(2) + p.delta_star.powi(2) - gap * gap).abs() < 1e-12 * (1.0 + gap * gap));
        }
    }

    #[test]
    fn optimum_beats_fine_grid() {
        let z = sample_z();
        let best = optimal_rotation(&z, None);
        for i in 0..1024 {
            let t = PI * i as f64 / 1024.0;
            assert!(basis_coefficients(&rotate(&z, t)).h <= best.value + 1e-12);
        }
    }

    #[test]
    fn flat_objective_flags_degeneracy() {
        let z = ZElements {
            blocks: vec![[[0.5, 0.0], [0.0, 0.5]]],
        };
        let r = optimal_rotation(&z, Some(1.0));
        assert!(r.degenerate);
        assert_eq!(r.theta, 1.0);
    }

    #[test]
    fn z_diagonal_basis_has_no_overlap() {
        let z = qubit_z(0.0);
        let c = basis_coefficients(&z);
        assert_eq!(c.a, 0.0);
        assert_eq!(c.h, 1.0);
        assert_eq!(c.d, 0.0);
        let r = optimal_rotation(&z, None);
        // h is quadratic at its peak, so θ is resolved to about √ε.
        assert!((r.theta - PI / 2.0).abs() < 1e-7);
    }

    #[test]
    fn single_qubit_pointer_quantities() {
        let slice = EigenSlice {
            s: 0.5,
            energies: vec![0.0, 2.0],
            vectors: vec![],
            omega10: 2.0,
            degenerate: false,
        };
        let z = qubit_z(0.6);
        let r = optimal_rotation(&z, None);
        let p = pointer_quantities(&slice, &z, r.theta, 0.3).unwrap();
        // The pointer states of one qubit are |↑⟩, |↓⟩: full Hamming distance, no asymmetry.
        assert!((p.coeffs.h - 1.0).abs() < 1e-10);
        assert!(p.coeffs.d.abs() < 1e-10);
        assert!(p.coeffs.a.abs() < 1e-10);
        assert!((p.omega - p.omega10_star).abs() < 1e-10);
        let at_half = pointer_quantities(&slice, &z, PI / 2.0, 0.0).unwrap();
        assert_eq!(at_half.omega10_star, 2.0);
        assert!(at_half.delta_star.abs() < 1e-15);
    }

    #[test]
    fn flipped_cluster_hamming() {
        // Left cell fully flipped between the two states, right cell fixed.
        let mut blocks = vec![[[1.0, 0.0], [0.0, -1.0]]; 8];
        blocks.extend(vec![[[-1.0, 0.0], [0.0, -1.0]]; 8]);
        let c = basis_coefficients(&ZElements { blocks });
        assert_eq!(c.h, 8.0);
    }

    #[test]
    fn start_of_anneal_is_unpolarized() {
        let sched = AnnealSchedule::linear(5.0, 10.0, 11).unwrap();
        let (sl, z) = slice_at(&sched, &WeakStrongSpec::default(), 0.0, 3).unwrap();
        for b in &z.blocks {
            assert!(b[0][0].abs() < 1e-8);
            assert!(b[0][1].abs() <= 1.0 + 1e-10);
        }
        assert!((sl.omega10 - 10.0).abs() < 1e-8);
    }
}
