//! Symmetric tridiagonal eigenproblems.
//!
//! Two routes: Sturm-sequence bisection plus inverse iteration for a few
//! extremal pairs of a large matrix, and implicit-shift QL for the full
//! spectrum of a small one.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm_bound());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.dim() {
            if q == 0.0 {
                q = tiny;
            }
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues by bisection, ascending.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(1e-300);
        (0..k.min(self.dim()))
            .map(|idx| {
                let (mut lo, mut hi) = (glo, ghi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * scale {
                        break;
                    }
                    if self.sturm_count(mid) > idx {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Solve (T − λ) x = b by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, lambda: f64, b: &mut [f64]) {
        let n = self.dim();
        let tiny = f64::EPSILON * self.norm_bound().max(1e-300);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - lambda).collect();
        if n == 1 {
            if d[0] == 0.0 {
                d[0] = tiny;
            }
            b[0] /= d[0];
            return;
        }
        let mut du = self.off.clone();
        let mut dl = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= dl[i] * b[i];
        }
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    }

    /// Lowest `k` eigenpairs: bisection for values, inverse iteration with
    /// Gram-Schmidt against earlier vectors for the eigenvectors.
    pub fn lowest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dim();
        let values = self.lowest_eigenvalues(k);
        let norm = self.norm_bound().max(1e-300);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut scratch = vec![0.0; n];
        for &lambda in &values {
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.25 * ((i as f64) * 0.618_033_988_7).sin())
                .collect();
            let mut converged = false;
            for _ in 0..8 {
                self.solve_shifted(lambda, &mut x);
                for v in &vectors {
                    let proj = dot(v, &x);
                    axpy(-proj, v, &mut x);
                }
                let nx = dot(&x, &x).sqrt();
                if !nx.is_finite() || nx == 0.0 {
                    return Err(Error::EigenNonConvergence(format!(
                        "inverse iteration broke down at λ = {lambda}"
                    )));
                }
                x.iter_mut().for_each(|v| *v /= nx);
                self.mul_vec(&x, &mut scratch);
                let res: f64 = scratch
                    .iter()
                    .zip(&x)
                    .map(|(hx, xi)| (hx - lambda * xi).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if res < 1e-10 * norm {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::EigenNonConvergence(format!(
                    "inverse iteration residual too large at λ = {lambda}"
                )));
            }
            fix_sign(&mut x);
            vectors.push(x);
        }
        Ok((values, vectors))
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal and `e` the off-diagonal in `e[0..n-1]`. On return
/// `d` holds the eigenvalues (unsorted). If `z` is given (row-major `n×n`,
/// usually the identity or a Householder accumulator) its columns are
/// rotated into eigenvectors.
pub fn tql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    debug_assert!(e.len() >= n);
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNonConvergence(format!(
                    "QL iteration stalled at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zf = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * zf;
                        z[k * n + i] = c * zi - s * zf;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Make the largest-magnitude component positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
