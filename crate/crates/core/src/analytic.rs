//! Closed-form average BER over Nakagami-m fading, and quadrature oracles
//! that check it.
//!
//! Every conditional BER here is a signed sum of Q(√(c ζ g)) kernels. The
//! first hop averages g over one Gamma gain; the second hop of an
//! energy-harvesting relay averages over the product g_r g_k, because the
//! relay power is itself proportional to g_r.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::channel::{FadingParams, Scenario, User};
use crate::error::{Error, Result};
use crate::protocol::{constellation_weights, derive_power, ConstellationWeights, DerivedPower, EhProtocol, PowerAllocation};
use crate::specfun::{
    erfcx, gauss_laguerre, gauss_laguerre_generalized, hyp2f1_split, ln_gamma, meijer_g_3345_scaled, ContourSpec,
    QuadratureRule,
};

pub const ORACLE_ORDER: usize = 128;
/// Scale of the y = v/s substitution in the single-hop oracle; tuned so that
/// order 64 already lands within a few ulps of order 128.
const ORACLE_STRETCH: f64 = 0.4;

/// Where a second-hop value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    /// The Meijer-G contour failed and the quadrature oracle was used instead.
    OracleFallback,
}

/// Analytical ABER of every stage for both users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AberBreakdown {
    pub relay_s1: f64,
    pub relay_s2: f64,
    pub phase2_u1: f64,
    pub phase2_u2: f64,
    pub e2e_u1: f64,
    pub e2e_u2: f64,
    pub phase2_u1_source: Provenance,
    pub phase2_u2_source: Provenance,
}

impl AberBreakdown {
    pub fn relay(&self, user: User) -> f64 {
        match user {
            User::U1 => self.relay_s1,
            User::U2 => self.relay_s2,
        }
    }

    pub fn phase2(&self, user: User) -> f64 {
        match user {
            User::U1 => self.phase2_u1,
            User::U2 => self.phase2_u2,
        }
    }

    pub fn e2e(&self, user: User) -> f64 {
        match user {
            User::U1 => self.e2e_u1,
            User::U2 => self.e2e_u2,
        }
    }
}

/// Per-link quantities of the product-channel closed form for one kernel
/// Q(√(K g_r g_k)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCoefficients {
    /// m_r - m_k
    pub u_diff: f64,
    /// (m_r + m_k)/2
    pub u_mean: f64,
    /// ln of (m_r/Ω_r)^{m_r} (m_k/Ω_k)^{m_k} / (Γ(m_r)Γ(m_k))
    pub ln_delta_norm: f64,
    /// ln of the norm times (m_k Ω_r / (m_r Ω_k))^{u_diff/2} K^{-u_mean}
    pub ln_delta_pref: f64,
    /// 2 √(m_r m_k / (Ω_r Ω_k K))
    pub delta_arg: f64,
    /// Meijer-G argument, delta_arg² / 2.
    pub argument: f64,
}

impl AnalyticCoefficients {
    pub fn new(k: f64, relay: FadingParams, user: FadingParams) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!("kernel scale must be positive and finite, got {k}")));
        }
        let (mr, mk) = (relay.m, user.m);
        let u_diff = mr - mk;
        let u_mean = 0.5 * (mr + mk);
        let ln_delta_norm = mr * (mr / relay.omega).ln() + mk * (mk / user.omega).ln() - ln_gamma(mr)? - ln_gamma(mk)?;
        let ln_delta_pref =
            ln_delta_norm + 0.5 * u_diff * (mk * relay.omega / (mr * user.omega)).ln() - u_mean * k.ln();
        let delta_arg = 2.0 * (mr * mk / (relay.omega * user.omega * k)).sqrt();
        Ok(Self { u_diff, u_mean, ln_delta_norm, ln_delta_pref, delta_arg, argument: 0.5 * delta_arg * delta_arg })
    }

    /// Parameter lists of the G^{3,3}_{4,5} function.
    pub fn meijer_params(&self) -> ([f64; 4], [f64; 5]) {
        let (u1, u2) = (self.u_diff, self.u_mean);
        ([0.0, 1.0 - u2, 0.5 - u2, 1.0 - u2], [0.5 * u1, -0.5 * u1, 1.0 - u2, -u2, 0.0])
    }
}

/// γ = φ P_T/N₀ and the derived protocol factors at one operating point.
#[derive(Debug, Clone, Copy)]
struct Operating {
    gamma: f64,
    dp: DerivedPower,
    w: ConstellationWeights,
}

impl Operating {
    fn new(scenario: &Scenario, protocol: &EhProtocol, pa: &PowerAllocation, total_snr_db: f64) -> Result<Self> {
        scenario.validate()?;
        pa.validate()?;
        if total_snr_db.is_nan() || total_snr_db == f64::INFINITY {
            return Err(Error::InvalidParameter(format!("total SNR must be finite, got {total_snr_db}")));
        }
        let dp = derive_power(protocol)?;
        let gamma = dp.phi * 10f64.powf(total_snr_db / 10.0);
        Ok(Self { gamma, dp, w: constellation_weights(pa) })
    }
}

fn user_terms(w: &ConstellationWeights, user: User) -> Vec<(f64, f64)> {
    match user {
        User::U1 => w.zeta_i.iter().map(|&z| (0.5, z)).collect(),
        User::U2 => w.nu_j.iter().zip(&w.zeta_j).map(|(&nu, &z)| (0.5 * nu as f64, z)).collect(),
    }
}

/// E[Q(√(k g))] for g ~ Gamma(m, Ω/m), in closed form.
///
/// With c = kΩ/(2m) the average is
/// Γ(m+½)/(2√π Γ(m+1)) · √c/(1+c)^{m+½} · ₂F₁(1, m+½; m+1; 1/(1+c)).
pub fn single_hop_closed(k: f64, fading: FadingParams) -> Result<f64> {
    fading.validate()?;
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("kernel scale must be non-negative, got {k}")));
    }
    if k == 0.0 {
        return Ok(0.5);
    }
    let m = fading.m;
    let c = k * fading.omega / (2.0 * m);
    // 1 - z = c/(1+c) passed exactly; forming it from z loses digits as c → 0
    let z = 1.0 / (1.0 + c);
    let f = hyp2f1_split(1.0, m + 0.5, m + 1.0, z, c / (1.0 + c))?;
    let ln_pref = ln_gamma(m + 0.5)? - ln_gamma(m + 1.0)? - (2.0 * PI.sqrt()).ln() + 0.5 * c.ln()
        - (m + 0.5) * c.ln_1p();
    Ok(ln_pref.exp() * f)
}

/// E[Q(√(K g_r g_k))] over independent Gamma gains, in closed form via a
/// Meijer G^{3,3}_{4,5}. Falls back to the quadrature oracle when the contour
/// integral cannot be evaluated.
pub fn product_hop_closed(k: f64, relay: FadingParams, user: FadingParams) -> Result<(f64, Provenance)> {
    relay.validate()?;
    user.validate()?;
    if !(k >= 0.0) {
        return Err(Error::Domain(format!("kernel scale must be non-negative, got {k}")));
    }
    if k == 0.0 {
        return Ok((0.5, Provenance::ClosedForm));
    }
    if k.is_infinite() {
        return Ok((0.0, Provenance::ClosedForm));
    }
    let co = AnalyticCoefficients::new(k, relay, user)?;
    match product_meijer(&co) {
        Ok(v) => Ok((v, Provenance::ClosedForm)),
        Err(e @ (Error::Contour { .. } | Error::NonConvergence { .. })) => {
            log::warn!("Meijer-G evaluation failed ({e}); using quadrature");
            Ok((oracle_product_kernel(k, relay, user, ORACLE_ORDER)?, Provenance::OracleFallback))
        }
        Err(e) => Err(e),
    }
}

fn product_meijer(co: &AnalyticCoefficients) -> Result<f64> {
    let (top, bottom) = co.meijer_params();
    let contour = ContourSpec::auto(&top, &bottom, co.argument)?;
    let (mantissa, ln_scale) = meijer_g_3345_scaled(&top, &bottom, co.argument, &contour)?;
    // 2^{u2} Δ₁/(2√π) · G
    let ln_pref = co.u_mean * 2f64.ln() + co.ln_delta_pref - (2.0 * PI.sqrt()).ln();
    Ok(mantissa * (ln_pref + ln_scale).exp())
}

/// Relay-stage ABER of s₁ (direct detection, s₂ treated as noise).
pub fn aber_relay_s1(scenario: &Scenario, protocol: &EhProtocol, pa: &PowerAllocation, total_snr_db: f64) -> Result<f64> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    relay_stage(&op, scenario, User::U1)
}

/// Relay-stage ABER of s₂ after SIC.
pub fn aber_relay_s2(scenario: &Scenario, protocol: &EhProtocol, pa: &PowerAllocation, total_snr_db: f64) -> Result<f64> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    relay_stage(&op, scenario, User::U2)
}

fn relay_stage(op: &Operating, scenario: &Scenario, user: User) -> Result<f64> {
    let c = op.dp.varpi * op.gamma;
    signed_sum(&user_terms(&op.w, user), |z| single_hop_closed(c * z, scenario.relay_link))
}

fn signed_sum<F: FnMut(f64) -> Result<f64>>(terms: &[(f64, f64)], mut kernel: F) -> Result<f64> {
    let mut acc = 0.0;
    for &(w, z) in terms {
        acc += w * kernel(z)?;
    }
    Ok(acc)
}

/// Second-hop ABER at U₁ with an energy-harvesting relay.
pub fn aber_phase2_u1(
    scenario: &Scenario,
    protocol: &EhProtocol,
    pa: &PowerAllocation,
    total_snr_db: f64,
) -> Result<(f64, Provenance)> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    phase2_eh(&op, scenario, User::U1)
}

/// Second-hop ABER at U₂ with an energy-harvesting relay.
pub fn aber_phase2_u2(
    scenario: &Scenario,
    protocol: &EhProtocol,
    pa: &PowerAllocation,
    total_snr_db: f64,
) -> Result<(f64, Provenance)> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    phase2_eh(&op, scenario, User::U2)
}

fn phase2_eh(op: &Operating, scenario: &Scenario, user: User) -> Result<(f64, Provenance)> {
    let psi = op.dp.psi.ok_or_else(|| Error::NotApplicable("product-channel ABER needs a harvesting relay".into()))?;
    let c = op.gamma * psi;
    let mut source = Provenance::ClosedForm;
    let v = signed_sum(&user_terms(&op.w, user), |z| {
        let (v, p) = product_hop_closed(c * z, scenario.relay_link, scenario.user_link(user))?;
        if p == Provenance::OracleFallback {
            source = p;
        }
        Ok(v)
    })?;
    Ok((v, source))
}

/// Second-hop ABER with a battery-powered relay: the first-hop template on
/// the R→U_k link with ϖ = 1 and φ = 1.
pub fn aber_phase2_no_eh(scenario: &Scenario, user: User, pa: &PowerAllocation, total_snr_db: f64) -> Result<f64> {
    let op = Operating::new(scenario, &EhProtocol::no_eh(), pa, total_snr_db)?;
    phase2_no_eh(&op, scenario, user)
}

fn phase2_no_eh(op: &Operating, scenario: &Scenario, user: User) -> Result<f64> {
    let link = scenario.user_link(user);
    signed_sum(&user_terms(&op.w, user), |z| single_hop_closed(op.gamma * z, link))
}

/// Union of independent stage errors, 1 - (1 - a)(1 - b).
pub fn combine_stages(relay: f64, phase2: f64) -> f64 {
    1.0 - (1.0 - relay) * (1.0 - phase2)
}

/// Every stage ABER at one operating point.
pub fn e2e_aber(scenario: &Scenario, protocol: &EhProtocol, pa: &PowerAllocation, total_snr_db: f64) -> Result<AberBreakdown> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    let relay_s1 = relay_stage(&op, scenario, User::U1)?;
    let relay_s2 = relay_stage(&op, scenario, User::U2)?;
    let ((phase2_u1, phase2_u1_source), (phase2_u2, phase2_u2_source)) = if protocol.harvests() {
        (phase2_eh(&op, scenario, User::U1)?, phase2_eh(&op, scenario, User::U2)?)
    } else {
        (
            (phase2_no_eh(&op, scenario, User::U1)?, Provenance::ClosedForm),
            (phase2_no_eh(&op, scenario, User::U2)?, Provenance::ClosedForm),
        )
    };
    Ok(AberBreakdown {
        relay_s1,
        relay_s2,
        phase2_u1,
        phase2_u2,
        e2e_u1: combine_stages(relay_s1, phase2_u1),
        e2e_u2: combine_stages(relay_s2, phase2_u2),
        phase2_u1_source,
        phase2_u2_source,
    })
}

/// The same breakdown computed entirely by quadrature.
pub fn e2e_aber_oracle(
    scenario: &Scenario,
    protocol: &EhProtocol,
    pa: &PowerAllocation,
    total_snr_db: f64,
) -> Result<AberBreakdown> {
    let op = Operating::new(scenario, protocol, pa, total_snr_db)?;
    let first = |user| oracle_single_hop(&user_terms(&op.w, user), op.dp.varpi * op.gamma, scenario.relay_link);
    let second = |user: User| match op.dp.psi {
        Some(psi) => oracle_product_hop(
            &user_terms(&op.w, user),
            op.gamma * psi,
            scenario.relay_link,
            scenario.user_link(user),
        ),
        None => oracle_single_hop(&user_terms(&op.w, user), op.gamma, scenario.user_link(user)),
    };
    let (relay_s1, relay_s2) = (first(User::U1)?, first(User::U2)?);
    let (phase2_u1, phase2_u2) = (second(User::U1)?, second(User::U2)?);
    Ok(AberBreakdown {
        relay_s1,
        relay_s2,
        phase2_u1,
        phase2_u2,
        e2e_u1: combine_stages(relay_s1, phase2_u1),
        e2e_u2: combine_stages(relay_s2, phase2_u2),
        phase2_u1_source: Provenance::OracleFallback,
        phase2_u2_source: Provenance::OracleFallback,
    })
}

// ---- oracles ----

type RuleCache = Mutex<HashMap<(usize, u64), Arc<QuadratureRule>>>;

fn cached_rule(order: usize, alpha: f64) -> Result<Arc<QuadratureRule>> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (order, alpha.to_bits());
    if let Some(r) = cache.lock().expect("rule cache poisoned").get(&key) {
        return Ok(Arc::clone(r));
    }
    let rule = Arc::new(if alpha == 0.0 { gauss_laguerre(order)? } else { gauss_laguerre_generalized(order, alpha)? });
    cache.lock().expect("rule cache poisoned").insert(key, Arc::clone(&rule));
    Ok(rule)
}

/// Σ_j w_j E[Q(√(c ζ_j g))] with g ~ Gamma(m, Ω/m), by quadrature.
pub fn oracle_single_hop(terms: &[(f64, f64)], c_scale: f64, fading: FadingParams) -> Result<f64> {
    oracle_single_hop_with_order(terms, c_scale, fading, ORACLE_ORDER)
}

pub fn oracle_single_hop_with_order(
    terms: &[(f64, f64)],
    c_scale: f64,
    fading: FadingParams,
    order: usize,
) -> Result<f64> {
    fading.validate()?;
    if order < 64 {
        return Err(Error::InvalidParameter(format!("oracle order must be at least 64, got {order}")));
    }
    let rule = cached_rule(order, 2.0 * fading.m - 1.0)?;
    let mut acc = 0.0;
    for &(w, z) in terms {
        acc += w * single_kernel(&rule, c_scale * z, fading);
    }
    Ok(acc)
}

/// E[Q(√(k g))] with g = θx, x ~ Gamma(m, 1).
///
/// Writing x = u², Q(au) = ½ erfcx(au/√2) e^{-a²u²/2} folds the Gaussian
/// tail into the weight, leaving a smooth integrand against u^{2m-1} e^{-b²u²}.
/// Rescaling v = bu and then v = s·y maps it onto a generalized
/// Gauss–Laguerre rule of parameter 2m - 1.
fn single_kernel(rule: &QuadratureRule, k: f64, fading: FadingParams) -> f64 {
    if k == 0.0 {
        return 0.5;
    }
    let m = fading.m;
    let a2 = k * fading.scale();
    let b2 = 1.0 + 0.5 * a2;
    let kappa = (0.5 * a2 / b2).sqrt();
    let s = ORACLE_STRETCH;
    let ln_front = 2f64.ln() - ln_gamma(m).expect("m >= 0.5") - m * b2.ln() + 2.0 * m * s.ln();
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.log_weights)
        .map(|(&y, &lw)| (lw + y - s * s * y * y).exp() * 0.5 * erfcx(kappa * s * y))
        .sum();
    ln_front.exp() * sum
}

/// Σ_j w_j E[Q(√(c ζ_j g_r g_k))] over independent Gamma gains, by a tensor
/// Gauss–Laguerre rule.
pub fn oracle_product_hop(
    terms: &[(f64, f64)],
    c_scale: f64,
    fading_r: FadingParams,
    fading_k: FadingParams,
) -> Result<f64> {
    oracle_product_hop_with_order(terms, c_scale, fading_r, fading_k, ORACLE_ORDER)
}

pub fn oracle_product_hop_with_order(
    terms: &[(f64, f64)],
    c_scale: f64,
    fading_r: FadingParams,
    fading_k: FadingParams,
    order: usize,
) -> Result<f64> {
    fading_r.validate()?;
    fading_k.validate()?;
    if order < 96 {
        return Err(Error::InvalidParameter(format!("product oracle order must be at least 96, got {order}")));
    }
    let mut acc = 0.0;
    for &(w, z) in terms {
        acc += w * oracle_product_kernel(c_scale * z, fading_r, fading_k, order)?;
    }
    Ok(acc)
}

/// Outer average over x = g_r/θ_r ~ Gamma(m_r, 1) of the inner single-hop
/// average. The outer integral is split at x = 1: on (0, 1) the map
/// x = e^{-t/m_r} removes both the x^{m_r-1} factor and the √x kink of the
/// inner average; on (1, ∞) a shifted plain rule is used.
fn oracle_product_kernel(k: f64, fading_r: FadingParams, fading_k: FadingParams, order: usize) -> Result<f64> {
    if k == 0.0 {
        return Ok(0.5);
    }
    let outer = cached_rule(order, 0.0)?;
    let inner = cached_rule(order, 2.0 * fading_k.m - 1.0)?;
    let (mr, theta) = (fading_r.m, fading_r.scale());
    let p = |x: f64| single_kernel(&inner, k * theta * x, fading_k);

    let mut left = 0.0;
    let mut right = 0.0;
    for (&t, &w) in outer.nodes.iter().zip(&outer.weights) {
        if w == 0.0 {
            continue;
        }
        let x = (-t / mr).exp();
        left += w * (-x).exp() * p(x);
        right += w * (1.0 + t).powf(mr - 1.0) * p(1.0 + t);
    }
    Ok((left / mr + right * (-1f64).exp()) * (-ln_gamma(mr)?).exp())
}

/// First-hop and second-hop kernel terms of one user, as (weight, ζ) pairs.
pub fn conditional_terms(pa: &PowerAllocation, user: User) -> Vec<(f64, f64)> {
    user_terms(&constellation_weights(pa), user)
}
