//! Numerical kernels: Gaussian tail, Gamma family, ₂F₁, Meijer-G and
//! Gauss–Laguerre rules.

mod gamma;
mod hyp2f1;
mod meijer;
mod quadrature;

pub use gamma::{gamma, ln_gamma, ln_gamma_complex, ln_gamma_signed, reg_lower_gamma, rgamma};
pub use hyp2f1::{hyp2f1, hyp2f1_direct, hyp2f1_split};
pub use meijer::{admissible_strip, meijer_g_3345, meijer_g_3345_scaled, meijer_g_3345_with, ContourSpec, MIN_PANELS};
pub use quadrature::{gauss_laguerre, gauss_laguerre_generalized, QuadratureRule, MAX_ORDER, MIN_ORDER};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Gaussian tail probability Pr{N(0,1) > x}.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function e^{x²} erfc(x), for x >= 0.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 10.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // asymptotic series; at x >= 10 the terms shrink by at least 1/200 each
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * inv2x2;
        sum += term;
    }
    sum / (x * PI.sqrt())
}
