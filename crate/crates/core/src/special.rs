//! Log-gamma on the complex plane, and a few numerically careful elementary
//! functions used by the bath kernels.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(z) for Re z ≥ 1/2 (Lanczos, g = 7).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let zm1 = z - 1.0;
    let mut series = Complex64::new(LANCZOS_P[0], 0.0);
    for (k, p) in LANCZOS_P.iter().enumerate().skip(1) {
        series += *p / (zm1 + k as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm1 + 0.5) * t.ln() - t + series.ln()
}

/// ln |Γ(z)|, valid on the whole plane away from the poles.
pub fn ln_abs_gamma(z: Complex64) -> f64 {
    if z.re >= 0.5 {
        ln_gamma_right(z).re
    } else {
        // Γ(z)Γ(1−z) = π / sin(πz)
        PI.ln() - ln_abs_sin_pi(z) - ln_gamma_right(1.0 - z).re
    }
}

/// ln Γ(x) for real x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    ln_abs_gamma(Complex64::new(x, 0.0))
}

/// ln |sin(πz)| without overflow for large |Im z|.
pub fn ln_abs_sin_pi(z: Complex64) -> f64 {
    let s = (PI * z.re).sin();
    let y = PI * z.im.abs();
    if y < 20.0 {
        0.5 * (s * s + y.sinh().powi(2)).ln()
    } else {
        let e2 = (-2.0 * y).exp();
        // ln sinh y + ½ ln(1 + s²/sinh² y)
        let ln_sinh = y - std::f64::consts::LN_2 + (-e2).ln_1p();
        ln_sinh + 0.5 * (4.0 * s * s * e2 / (1.0 - e2).powi(2)).ln_1p()
    }
}

/// Principal ln sinh(x) for Im x ∈ (−π/2, 0], the strip traversed by the
/// regularized bath kernel. The result is continuous in Re x.
pub fn ln_sinh_lower_strip(x: Complex64) -> Complex64 {
    if x.re > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p_c()
    } else if x.re < -20.0 {
        -x - std::f64::consts::LN_2 + (-(2.0 * x).exp()).ln_1p_c() - Complex64::new(0.0, PI)
    } else {
        x.sinh().ln()
    }
}

/// coth x with the same large-|Re x| care.
pub fn coth_stable(x: Complex64) -> Complex64 {
    if x.re.abs() > 20.0 {
        let sign = x.re.signum();
        let e = (-2.0 * sign * x).exp();
        sign * (1.0 + e) / (1.0 - e)
    } else {
        x.cosh() / x.sinh()
    }
}

/// 1/sinh² x with the same large-|Re x| care.
pub fn inv_sinh_sq_stable(x: Complex64) -> Complex64 {
    if x.re.abs() > 20.0 {
        let sign = x.re.signum();
        let e = (-2.0 * sign * x).exp();
        4.0 * e / ((1.0 - e) * (1.0 - e))
    } else {
        let s = x.sinh();
        1.0 / (s * s)
    }
}

trait Ln1pComplex {
    fn ln_1p_c(self) -> Complex64;
}

impl Ln1pComplex for Complex64 {
    fn ln_1p_c(self) -> Complex64 {
        if self.norm() < 1e-8 {
            self - 0.5 * self * self
        } else {
            (1.0 + self).ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(0.003) - 333.3333_f64.ln()).abs() < 1e-2);
    }

    #[test]
    fn imaginary_axis_modulus() {
        // |Γ(iy)|² = π / (y sinh πy)
        for &y in &[0.1, 1.0, 5.0, 40.0, 300.0] {
            let got = 2.0 * ln_abs_gamma(Complex64::new(0.0, y));
            let sinh_ln = if PI * y > 20.0 {
                PI * y - std::f64::consts::LN_2
            } else {
                (PI * y).sinh().ln()
            };
            let want = PI.ln() - y.ln() - sinh_ln;
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "y={y}");
        }
    }

    #[test]
    fn half_line_modulus() {
        // |Γ(½ + iy)|² = π / cosh πy
        for &y in &[0.0, 0.7, 12.0] {
            let got = 2.0 * ln_abs_gamma(Complex64::new(0.5, y));
            let want = PI.ln() - (PI * y).cosh().ln();
            assert!((got - want).abs() < 1e-11);
        }
    }

    #[test]
    fn ln_sinh_matches_direct_and_branches_join() {
        let d = 0.01;
        for i in -150..=150 {
            let x = Complex64::new(i as f64 * 0.1, -d);
            assert!((ln_sinh_lower_strip(x) - x.sinh().ln()).norm() < 1e-12);
        }
        for &re in &[-20.0, 20.0] {
            let inner = Complex64::new(re * (1.0 - 1e-12), -d);
            let outer = Complex64::new(re * (1.0 + 1e-12), -d);
            assert!((ln_sinh_lower_strip(inner) - ln_sinh_lower_strip(outer)).norm() < 1e-9);
        }
        let far = ln_sinh_lower_strip(Complex64::new(-400.0, -d));
        assert!(far.re.is_finite() && (far.im + PI - d).abs() < 1e-9);
    }
}
