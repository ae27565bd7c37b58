//! Lanczos with full reorthogonalization for a few lowest eigenpairs of a
//! large symmetric operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tridiag::{axpy, dot, fix_sign, tql_implicit};
use crate::error::{Error, Result};

/// Anything that can apply a symmetric matrix to a vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Converged when every wanted Ritz residual is below `tol · ‖T‖`.
    pub tol: f64,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-11,
            check_every: 8,
            seed: 0x5eed_1a4c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..4 {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for b in basis {
                let p = dot(b, &v);
                axpy(-p, b, &mut v);
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            return Some(v);
        }
    }
    None
}

/// Ritz pairs of the current tridiagonal: (values, eigenvector matrix row-major).
fn ritz(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(&beta[..m - 1]);
    let mut z = vec![0.0; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }
    tql_implicit(&mut d, &mut e, Some(&mut z))?;
    Ok((d, z))
}

pub fn lanczos_lowest<O: LinearOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let max_iter = opts.max_iter.min(dim).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_iter);
    let mut beta: Vec<f64> = Vec::with_capacity(max_iter);
    basis.push(random_unit(dim, &mut rng, &[]).expect("nonzero dimension"));
    let mut w = vec![0.0; dim];
    let mut last_report = (f64::INFINITY, 0usize);

    for j in 0..max_iter {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            for v in &basis {
                let p = dot(v, &w);
                axpy(-p, v, &mut w);
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = j + 1;
        let tnorm = alpha
            .iter()
            .chain(beta.iter())
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
            .max(b.abs())
            .max(1e-300);
        let exhausted = m == dim;
        let breakdown = b <= 1e-12 * tnorm;

        // A breakdown short of the full space may hide further copies of a
        // degenerate level, so keep going in a fresh direction first.
        let premature = breakdown && !exhausted && m < max_iter;
        if m >= k && !premature && (m % opts.check_every == 0 || exhausted || m == max_iter) {
            let (theta, z) = ritz(&alpha, &beta)?;
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| theta[x].total_cmp(&theta[y]));
            let wanted = &order[..k];
            let residuals: Vec<f64> = wanted
                .iter()
                .map(|&c| (b * z[(m - 1) * m + c]).abs())
                .collect();
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            last_report = (worst / tnorm, m);
            if worst <= opts.tol * tnorm || exhausted {
                let values = wanted.iter().map(|&c| theta[c]).collect();
                let vectors = wanted
                    .iter()
                    .map(|&c| {
                        let mut v = vec![0.0; dim];
                        for (r, q) in basis.iter().enumerate() {
                            axpy(z[r * m + c], q, &mut v);
                        }
                        let nv = dot(&v, &v).sqrt();
                        v.iter_mut().for_each(|x| *x /= nv);
                        fix_sign(&mut v);
                        v
                    })
                    .collect();
                return Ok(LanczosResult {
                    values,
                    vectors,
                    residuals,
                    iterations: m,
                });
            }
        }
        if m == max_iter {
            break;
        }
        if breakdown {
            // Invariant subspace found; continue in a fresh direction so that
            // degenerate levels are not missed.
            beta.push(0.0);
            match random_unit(dim, &mut rng, &basis) {
                Some(v) => basis.push(v),
                None => break,
            }
        } else {
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
    Err(Error::EigenNonConvergence(format!(
        "Lanczos: relative residual {:.3e} after {} iterations",
        last_report.0, last_report.1
    )))
}
