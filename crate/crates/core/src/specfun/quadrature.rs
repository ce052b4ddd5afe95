//! Gauss–Laguerre rules for ∫₀^∞ x^α e^{-x} f(x) dx.

use super::gamma::ln_gamma;
use crate::error::{Error, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 256;

/// Nodes and weights of an n-point Gauss–Laguerre rule.
///
/// Weights are normalized so that they sum to Γ(α+1); for the plain e^{-x}
/// weight that is 1. Far-tail weights of high orders fall below the f64
/// range (around order 180 for α = 0), so `log_weights` is kept alongside and
/// `weights` may contain zeros there.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub order: usize,
    pub alpha: f64,
}

impl QuadratureRule {
    /// Σ wᵢ f(xᵢ).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Rule for the weight e^{-x} on (0, ∞).
pub fn gauss_laguerre(order: usize) -> Result<QuadratureRule> {
    gauss_laguerre_generalized(order, 0.0)
}

/// Rule for the weight x^α e^{-x} on (0, ∞), α > -1.
pub fn gauss_laguerre_generalized(order: usize, alpha: f64) -> Result<QuadratureRule> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "Gauss-Laguerre order must be in [{MIN_ORDER}, {MAX_ORDER}], got {order}"
        )));
    }
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("Gauss-Laguerre alpha must exceed -1, got {alpha}")));
    }
    let n = order;
    // Jacobi matrix of the monic Laguerre recurrence
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (0..n).map(|k| ((k as f64) * (k as f64 + alpha)).sqrt()).collect();

    let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    for x in nodes.iter_mut() {
        *x = newton_polish(*x, &diag, &off);
    }
    for w in nodes.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::NonConvergence { what: "Gauss-Laguerre node separation", iterations: 0 });
        }
    }
    if !(nodes[0] > 0.0) {
        return Err(Error::NonConvergence { what: "Gauss-Laguerre smallest node", iterations: 0 });
    }

    let ln_mu0 = ln_gamma(alpha + 1.0)?;
    let log_weights: Vec<f64> = nodes.iter().map(|&x| ln_mu0 - ln_christoffel_sum(x, &diag, &off)).collect();
    let weights = log_weights.iter().map(|lw| lw.exp()).collect();
    Ok(QuadratureRule { nodes, weights, log_weights, order: n, alpha })
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `off[k]` couples rows k-1 and k; `off[0]` is ignored.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    const MAX_ITER: usize = 60;
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[1..]);

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
            if iter > MAX_ITER {
                return Err(Error::NonConvergence { what: "Gauss-Laguerre eigenvalues", iterations: MAX_ITER });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Newton steps on the degree-n monic polynomial, evaluated with rescaling so
/// that large nodes do not overflow.
fn newton_polish(mut x: f64, diag: &[f64], off: &[f64]) -> f64 {
    for _ in 0..4 {
        let (p, dp) = monic_with_derivative(x, diag, off);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

fn monic_with_derivative(x: f64, diag: &[f64], off: &[f64]) -> (f64, f64) {
    let (mut p0, mut p1) = (0.0, 1.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    for k in 0..diag.len() {
        let b2 = off[k] * off[k];
        let p2 = (x - diag[k]) * p1 - b2 * p0;
        let d2 = p1 + (x - diag[k]) * d1 - b2 * d0;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        let scale = p1.abs().max(d1.abs());
        if scale > 1e150 {
            p0 /= scale;
            p1 /= scale;
            d0 /= scale;
            d1 /= scale;
        }
    }
    (p1, d1)
}

/// ln Σ_{k<n} q_k(x)², q_k the orthonormal polynomials of the weight.
fn ln_christoffel_sum(x: f64, diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let (mut q0, mut q1) = (0.0, 1.0);
    let mut ln_scale = 0.0;
    let mut sum = 1.0;
    for k in 0..n - 1 {
        let q2 = ((x - diag[k]) * q1 - off[k] * q0) / off[k + 1];
        q0 = q1;
        q1 = q2;
        sum += q1 * q1;
        if sum > 1e200 {
            let s = sum.sqrt();
            q0 /= s;
            q1 /= s;
            sum = 1.0;
            ln_scale += 2.0 * s.ln();
        }
    }
    sum.ln() + ln_scale
}
