//! Meijer G^{3,3}_{4,5} by numerical Mellin–Barnes integration.
//!
//! G(x) = 1/(2πi) ∫_L Π_{j≤3} Γ(b_j - s) Π_{j≤3} Γ(1 - a_j + s)
//!                    / (Γ(1 - b_4 + s) Γ(1 - b_5 + s) Γ(a_4 - s)) · x^s ds
//!
//! with L the vertical line Re s = c between the two pole families. For real
//! parameters the integrand is conjugate-symmetric, so
//! G = (1/π) ∫_0^∞ Re F(c + it) dt, which the trapezoidal rule resolves with
//! geometric convergence because F is analytic in the strip and decays like
//! e^{-3π|t|/2}.

use num_complex::Complex64;

use super::gamma::ln_gamma_complex;
use crate::error::{Error, Result};

pub const MIN_PANELS: usize = 64;
const STABILITY_TOL: f64 = 1e-8;
const TAIL_RATIO: f64 = 1e-14;
const MAX_HALF_SPAN: f64 = 4096.0;

/// Vertical integration line Re s = `real_shift`, truncated to
/// |Im s| <= `half_span` and split into `panel_count` trapezoid panels on the
/// upper half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub real_shift: f64,
    pub half_span: f64,
    pub panel_count: usize,
}

impl ContourSpec {
    /// Checks that the line separates the pole families of `top`/`bottom`.
    pub fn new(top: &[f64; 4], bottom: &[f64; 5], real_shift: f64, half_span: f64, panel_count: usize) -> Result<Self> {
        let integrand = Integrand::new(top, bottom);
        let (left, right) = integrand.strip()?;
        if !(real_shift > left && real_shift < right) {
            return Err(Error::Contour { left, right });
        }
        if !(half_span > 0.0) || !half_span.is_finite() {
            return Err(Error::InvalidParameter(format!("half_span must be positive, got {half_span}")));
        }
        if panel_count < MIN_PANELS {
            return Err(Error::InvalidParameter(format!(
                "panel_count must be at least {MIN_PANELS}, got {panel_count}"
            )));
        }
        Ok(Self { real_shift, half_span, panel_count })
    }

    /// Line through the middle of the admissible strip, span grown until the
    /// integrand has decayed by 1e-14 relative to its peak.
    pub fn auto(top: &[f64; 4], bottom: &[f64; 5], x: f64) -> Result<Self> {
        check_argument(x)?;
        let integrand = Integrand::new(top, bottom);
        let (left, right) = integrand.strip()?;
        let real_shift = match (left.is_finite(), right.is_finite()) {
            (true, true) => 0.5 * (left + right),
            (true, false) => left + 1.0,
            (false, true) => right - 1.0,
            (false, false) => 0.0,
        };
        let ln_x = x.ln();
        let half_width = (real_shift - left).min(right - real_shift).min(1.0);
        let ln_peak = integrand.ln_f(Complex64::new(real_shift, 0.0), ln_x).re;

        let mut half_span: f64 = 4.0;
        loop {
            let tail = integrand.ln_f(Complex64::new(real_shift, half_span), ln_x).re;
            // coarse look for a peak away from the real axis
            let coarse = (1..=16)
                .map(|k| integrand.ln_f(Complex64::new(real_shift, half_span * k as f64 / 16.0), ln_x).re)
                .fold(ln_peak, f64::max);
            if tail - coarse < TAIL_RATIO.ln() {
                break;
            }
            half_span *= 2.0;
            if half_span > MAX_HALF_SPAN {
                return Err(Error::NonConvergence { what: "Meijer-G contour span", iterations: 11 });
            }
        }
        // step small against the distance to the nearest pole and the x^s oscillation
        let step = (half_width / 3.0).min(std::f64::consts::PI / (4.0 * ln_x.abs().max(1.0)));
        let panel_count = ((half_span / step).ceil() as usize).max(MIN_PANELS);
        Ok(Self { real_shift, half_span, panel_count })
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Meijer-G argument must be positive and finite, got {x}")));
    }
    Ok(())
}

/// Gamma factors remaining after pairs that cancel identically are removed.
#[derive(Debug, Clone)]
struct Integrand {
    /// b_j with Γ(b_j - s) in the numerator
    right: Vec<f64>,
    /// a_j with Γ(1 - a_j + s) in the numerator
    left: Vec<f64>,
    /// b_j with Γ(1 - b_j + s) in the denominator
    den_rising: Vec<f64>,
    /// a_j with Γ(a_j - s) in the denominator
    den_falling: Vec<f64>,
}

impl Integrand {
    fn new(top: &[f64; 4], bottom: &[f64; 5]) -> Self {
        let mut right = bottom[..3].to_vec();
        let mut left = top[..3].to_vec();
        let mut den_rising = bottom[3..].to_vec();
        let mut den_falling = top[3..].to_vec();
        cancel(&mut right, &mut den_falling);
        cancel(&mut left, &mut den_rising);
        Self { right, left, den_rising, den_falling }
    }

    /// (max left-family pole, min right-family pole)
    fn strip(&self) -> Result<(f64, f64)> {
        let left = self.left.iter().map(|a| a - 1.0).fold(f64::NEG_INFINITY, f64::max);
        let right = self.right.iter().copied().fold(f64::INFINITY, f64::min);
        if left < right {
            Ok((left, right))
        } else {
            Err(Error::Contour { left, right })
        }
    }

    fn ln_f(&self, s: Complex64, ln_x: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut acc = s * ln_x;
        for &b in &self.right {
            acc += ln_gamma_complex(b - s);
        }
        for &a in &self.left {
            acc += ln_gamma_complex(one - a + s);
        }
        for &b in &self.den_rising {
            acc -= ln_gamma_complex(one - b + s);
        }
        for &a in &self.den_falling {
            acc -= ln_gamma_complex(a - s);
        }
        acc
    }
}

fn cancel(num: &mut Vec<f64>, den: &mut Vec<f64>) {
    let mut i = 0;
    while i < num.len() {
        if let Some(j) = den.iter().position(|&d| d == num[i]) {
            num.swap_remove(i);
            den.swap_remove(j);
        } else {
            i += 1;
        }
    }
}

/// G^{3,3}_{4,5}(x | top; bottom) on an automatically placed contour.
pub fn meijer_g_3345(top: &[f64; 4], bottom: &[f64; 5], x: f64) -> Result<f64> {
    let contour = ContourSpec::auto(top, bottom, x)?;
    meijer_g_3345_with(top, bottom, x, &contour)
}

/// G^{3,3}_{4,5}(x) on a caller-supplied contour.
pub fn meijer_g_3345_with(top: &[f64; 4], bottom: &[f64; 5], x: f64, contour: &ContourSpec) -> Result<f64> {
    let (mantissa, ln_scale) = meijer_g_3345_scaled(top, bottom, x, contour)?;
    Ok(mantissa * ln_scale.exp())
}

/// Returns (m, L) with G = m·e^L, so callers can fold large prefactors in
/// log space before exponentiating.
pub fn meijer_g_3345_scaled(top: &[f64; 4], bottom: &[f64; 5], x: f64, contour: &ContourSpec) -> Result<(f64, f64)> {
    check_argument(x)?;
    let integrand = Integrand::new(top, bottom);
    let (left, right) = integrand.strip()?;
    let c = contour.real_shift;
    if !(c > left && c < right) {
        return Err(Error::Contour { left, right });
    }
    let ln_x = x.ln();
    let ln_scale = integrand.ln_f(Complex64::new(c, 0.0), ln_x).re;
    let f = |t: f64| -> f64 {
        let v = integrand.ln_f(Complex64::new(c, t), ln_x) - ln_scale;
        v.exp().re
    };

    let span = contour.half_span;
    let mut panels = contour.panel_count.max(MIN_PANELS);
    let mut h = span / panels as f64;
    // interior sum plus half-weighted endpoints
    let mut sum = 0.5 * (f(0.0) + f(span)) + (1..panels).map(|k| f(k as f64 * h)).sum::<f64>();
    let mut estimate = sum * h;
    for _ in 0..2 {
        let mid: f64 = (0..panels).map(|k| f((k as f64 + 0.5) * h)).sum();
        sum += mid;
        panels *= 2;
        h *= 0.5;
        let refined = sum * h;
        if (refined - estimate).abs() <= STABILITY_TOL * refined.abs() {
            return Ok((refined / std::f64::consts::PI, ln_scale));
        }
        estimate = refined;
    }
    Err(Error::NonConvergence { what: "Meijer-G trapezoid refinement", iterations: 2 })
}

/// Edges of the strip in which a contour must lie, after cancellation.
pub fn admissible_strip(top: &[f64; 4], bottom: &[f64; 5]) -> Result<(f64, f64)> {
    Integrand::new(top, bottom).strip()
}
