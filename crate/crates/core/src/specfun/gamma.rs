//! Gamma-family functions on real and complex arguments.
//!
//! Everything is computed in log space from a Lanczos approximation
//! (g = 7, nine coefficients), with the reflection formula for arguments
//! left of Re = 1/2.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx), and sin(πx) > 0 on (0, 1/2)
        return PI.ln() - (PI * x).sin().ln() - lanczos_real(1.0 - x);
    }
    lanczos_real(x)
}

fn lanczos_real(x: f64) -> f64 {
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `(ln|Γ(x)|, sign Γ(x))` for any real x that is not a pole.
/// Returns `None` at the poles x = 0, -1, -2, ...
pub fn ln_gamma_signed(x: f64) -> Option<(f64, f64)> {
    if x > 0.0 {
        return Some((ln_gamma_pos(x), 1.0));
    }
    if x == x.floor() {
        return None;
    }
    let s = (PI * x).sin();
    let ln = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    Some((ln, s.signum()))
}

/// Γ(x) for real x, infinite at poles.
pub fn gamma(x: f64) -> f64 {
    match ln_gamma_signed(x) {
        Some((ln, sign)) => sign * ln.exp(),
        None => f64::INFINITY,
    }
}

/// 1/Γ(x), which is entire: zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    match ln_gamma_signed(x) {
        Some((ln, sign)) => sign * (-ln).exp(),
        None => 0.0,
    }
}

/// A branch of ln Γ(z) on the complex plane, z not a pole.
///
/// The imaginary part is only defined modulo 2π; callers exponentiate sums of
/// these values, which makes the branch irrelevant.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let one = Complex64::new(1.0, 0.0);
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - lanczos_complex(one - z);
    }
    lanczos_complex(z)
}

fn lanczos_complex(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += *c / (z + i as f64);
    }
    let t = z + (LANCZOS_G + 0.5);
    (z + 0.5) * t.ln() - t + acc.ln() + LN_SQRT_2PI
}

/// ln sin(πz), stable for large |Im z| where sin itself overflows.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let ln_2i = Complex64::new(2f64.ln(), PI / 2.0);
    if z.im >= 0.0 {
        // sin(πz) = e^{-iπz} (e^{2iπz} - 1) / (2i), |e^{2iπz}| <= 1
        let e = (2.0 * PI * i * z).exp();
        -PI * i * z + (e - 1.0).ln() - ln_2i
    } else {
        // sin(πz) = e^{iπz} (1 - e^{-2iπz}) / (2i), |e^{-2iπz}| <= 1
        let e = (-2.0 * PI * i * z).exp();
        PI * i * z + (1.0 - e).ln() - ln_2i
    }
}

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("reg_lower_gamma requires a > 0, got {a}")));
    }
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("reg_lower_gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let ln_prefix = a * x.ln() - x - ln_gamma_pos(a);
    if x < a + 1.0 {
        // series: P = x^a e^{-x} / Γ(a+1) Σ x^n / ((a+1)...(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..10_000 {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                return Ok((ln_prefix + sum.ln()).exp().min(1.0));
            }
        }
        Err(Error::NonConvergence { what: "incomplete gamma series", iterations: 10_000 })
    } else {
        // Lentz continued fraction for Q = 1 - P
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                let q = (ln_prefix + h.ln()).exp();
                return Ok((1.0 - q).max(0.0));
            }
        }
        Err(Error::NonConvergence { what: "incomplete gamma continued fraction", iterations: 10_000 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(ln_gamma(0.5).unwrap(), 0.5 * PI.ln(), max_relative = 1e-14);
        // Γ(2.5) = 1.5 · 0.5 · √π
        let oracle = (1.5f64 * 0.5 * PI.sqrt()).ln();
        assert_relative_eq!(ln_gamma(2.5).unwrap(), oracle, max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(2.5).unwrap(), 0.284_682_870_472_919_2, epsilon = 1e-10);
        // 170! is close to the f64 ceiling
        let ln_fact: f64 = (1..=170).map(|k| (k as f64).ln()).sum();
        assert_relative_eq!(ln_gamma(171.0).unwrap(), ln_fact, max_relative = 1e-13);
    }

    #[test]
    fn ln_gamma_rejects_non_positive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn ln_gamma_recurrence() {
        for i in 1..400 {
            let x = 0.013 * i as f64 + 0.001;
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + x.ln();
            assert!((lhs - rhs).abs() < 1e-12, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn signed_gamma_on_negative_axis() {
        // Γ(-0.5) = -2√π, Γ(-1.5) = 4√π/3
        assert_relative_eq!(gamma(-0.5), -2.0 * PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(gamma(-1.5), 4.0 * PI.sqrt() / 3.0, max_relative = 1e-13);
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!(ln_gamma_signed(-2.0).is_none());
    }

    #[test]
    fn complex_matches_real_axis() {
        for &x in &[0.1, 0.5, 1.0, 1.7, 3.25, 10.0, -0.3, -2.6] {
            let z = ln_gamma_complex(Complex64::new(x, 0.0)).exp();
            assert_relative_eq!(z.re, gamma(x), max_relative = 1e-13);
            assert!(z.im.abs() < 1e-12 * z.re.abs());
        }
    }

    #[test]
    fn complex_recurrence_and_modulus() {
        let one = Complex64::new(1.0, 0.0);
        for &(x, y) in &[(0.3, 2.0), (-0.75, 5.0), (1.5, -12.0), (-2.25, 30.0), (0.25, -45.0)] {
            let z = Complex64::new(x, y);
            let lhs = ln_gamma_complex(z + one).exp();
            let rhs = ln_gamma_complex(z).exp() * z;
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm(), "z={z}: {lhs} vs {rhs}");
        }
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for &y in &[0.5, 3.0, 20.0] {
            let m = ln_gamma_complex(Complex64::new(0.5, y)).re;
            let oracle = 0.5 * (PI.ln() - (PI * y).cosh().ln());
            assert!((m - oracle).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn incomplete_gamma_special_cases() {
        // a = 1: P(1, x) = 1 - e^{-x}
        for &x in &[0.01, 0.5, 2.0, 7.5, 30.0] {
            assert_relative_eq!(reg_lower_gamma(1.0, x).unwrap(), 1.0 - (-x).exp(), max_relative = 1e-13);
        }
        // a = 1/2: P(1/2, x) = erf(√x)
        for &x in &[0.01, 0.4, 1.0, 3.0, 12.0] {
            assert_relative_eq!(reg_lower_gamma(0.5, x).unwrap(), libm::erf(x.sqrt()), max_relative = 1e-13);
        }
        assert_eq!(reg_lower_gamma(2.0, 0.0).unwrap(), 0.0);
        assert!(reg_lower_gamma(0.0, 1.0).is_err());
    }
}
