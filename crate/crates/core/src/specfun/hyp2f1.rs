//! Gauss hypergeometric function ₂F₁(a, b; c; z) on 0 <= z < 1.

use super::gamma::{ln_gamma_signed, rgamma};
use crate::error::{Error, Result};

const MAX_TERMS: usize = 10_000;
const TERM_TOL: f64 = 1e-12;
/// Below this distance from an integer, c - a - b is treated as integral and
/// the 1 - z connection formula (which has Γ(c-a-b) poles there) is skipped.
const INTEGER_GUARD: f64 = 1e-3;

/// ₂F₁(a, b; c; z) for c > 0 and z in [0, 1).
///
/// Uses the Maclaurin series up to z = 1/2. Beyond that it switches to the
/// connection formula in 1 - z, which converges geometrically at rate 1 - z.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    hyp2f1_split(a, b, c, z, 1.0 - z)
}

/// As [`hyp2f1`], with 1 - z supplied separately so that callers holding an
/// exact complement do not lose digits to cancellation when z is close to 1.
pub fn hyp2f1_split(a: f64, b: f64, c: f64, z: f64, one_minus_z: f64) -> Result<f64> {
    check_domain(a, b, c, z)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    let d = c - a - b;
    if z <= 0.5 || (d - d.round()).abs() < INTEGER_GUARD {
        return series(a, b, c, z);
    }
    connection(a, b, c, one_minus_z, d)
}

/// The plain Maclaurin series, without any transformation.
pub fn hyp2f1_direct(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    check_domain(a, b, c, z)?;
    series(a, b, c, z)
}

fn check_domain(a: f64, b: f64, c: f64, z: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("hyp2f1 parameters must be finite (a={a}, b={b})")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("hyp2f1 requires c > 0, got {c}")));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("hyp2f1 requires 0 <= z < 1, got {z}")));
    }
    Ok(())
}

/// Σ (a)_n (b)_n / (c)_n z^n / n!, stopping once the term, inflated by the
/// geometric tail bound 1/(1-z), drops below TERM_TOL of the partial sum.
fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let tail = 1.0 / (1.0 - z.abs()).max(1e-300);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        // once the ratio has settled below 1 the tail is bounded geometrically
        let ratio_settled = nf > (a.abs() + b.abs() + c.abs());
        if ratio_settled && term.abs() * tail <= TERM_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { what: "hyp2f1 series", iterations: MAX_TERMS })
}

/// ₂F₁(a,b;c;z) = A ₂F₁(a,b;1-d;1-z) + B (1-z)^d ₂F₁(c-a,c-b;1+d;1-z), d = c-a-b.
fn connection(a: f64, b: f64, c: f64, w: f64, d: f64) -> Result<f64> {
    let first = gamma_quotient(c, d, c - a, c - b) * series(a, b, 1.0 - d, w)?;
    let second = gamma_quotient(c, -d, a, b) * w.powf(d) * series(c - a, c - b, 1.0 + d, w)?;
    Ok(first + second)
}

/// Γ(p)Γ(q) / (Γ(r)Γ(s)) with signs, zero when r or s sits on a pole.
fn gamma_quotient(p: f64, q: f64, r: f64, s: f64) -> f64 {
    let (rr, rs) = (rgamma(r), rgamma(s));
    if rr == 0.0 || rs == 0.0 {
        return 0.0;
    }
    let (lp, sp) = ln_gamma_signed(p).expect("c > 0");
    let (lq, sq) = ln_gamma_signed(q).expect("non-integral d");
    let (lr, sr) = ln_gamma_signed(r).expect("checked above");
    let (ls, ss) = ln_gamma_signed(s).expect("checked above");
    sp * sq * sr * ss * (lp + lq - lr - ls).exp()
}
