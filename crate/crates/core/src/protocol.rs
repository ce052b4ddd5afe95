//! Power and time bookkeeping for the relaying protocols, and the
//! constellation weights that enter the conditional BER expressions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admitted time-switching fraction. The harvest gain grows like
/// 1/(1-β) and is unbounded at β = 1.
pub const BETA_MAX: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EhKind {
    NoEh,
    PowerSplitting { rho: f64 },
    TimeSwitching { beta: f64 },
    Hybrid { beta: f64, rho: f64 },
}

/// Protocol selector plus the energy conversion efficiency η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhProtocol {
    pub kind: EhKind,
    pub eta: f64,
}

impl EhProtocol {
    pub fn no_eh() -> Self {
        // η is never used without harvesting; any admissible value will do
        Self { kind: EhKind::NoEh, eta: 0.5 }
    }

    pub fn power_splitting(rho: f64, eta: f64) -> Result<Self> {
        Self::new(EhKind::PowerSplitting { rho }, eta)
    }

    pub fn time_switching(beta: f64, eta: f64) -> Result<Self> {
        Self::new(EhKind::TimeSwitching { beta }, eta)
    }

    pub fn hybrid(beta: f64, rho: f64, eta: f64) -> Result<Self> {
        Self::new(EhKind::Hybrid { beta, rho }, eta)
    }

    pub fn new(kind: EhKind, eta: f64) -> Result<Self> {
        let p = Self { kind, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if let Some(beta) = self.beta() {
            if beta == 1.0 {
                return Err(Error::InvalidParameter("beta = 1 leaves no time for information transfer".into()));
            }
            if !(0.0..=BETA_MAX).contains(&beta) {
                return Err(Error::InvalidParameter(format!("beta must lie in [0, {BETA_MAX}], got {beta}")));
            }
        }
        if let Some(rho) = self.rho() {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::InvalidParameter(format!("rho must lie in [0, 1], got {rho}")));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> Option<f64> {
        match self.kind {
            EhKind::TimeSwitching { beta } | EhKind::Hybrid { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match self.kind {
            EhKind::PowerSplitting { rho } | EhKind::Hybrid { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn harvests(&self) -> bool {
        !matches!(self.kind, EhKind::NoEh)
    }

    /// Short label used in result files.
    pub fn label(&self) -> &'static str {
        match self.kind {
            EhKind::NoEh => "no_eh",
            EhKind::PowerSplitting { .. } => "ps",
            EhKind::TimeSwitching { .. } => "ts",
            EhKind::Hybrid { .. } => "hybrid",
        }
    }
}

/// Factors derived from a protocol. Time fractions are of a unit block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedPower {
    /// Source power factor φ: P_s = φ P_T.
    pub phi: f64,
    /// Share ϖ of the received power routed to the information decoder.
    pub varpi: f64,
    /// Harvest gain Ψ, with P_r = Ψ P_s |h_r|². `None` without harvesting.
    pub psi: Option<f64>,
    pub t_harvest: f64,
    pub t_phase1: f64,
    pub t_phase2: f64,
}

pub fn derive_power(protocol: &EhProtocol) -> Result<DerivedPower> {
    protocol.validate()?;
    let eta = protocol.eta;
    let half = (0.0, 0.5, 0.5);
    let split = |beta: f64| (beta, 0.5 * (1.0 - beta), 0.5 * (1.0 - beta));
    let (phi, varpi, psi, (t_harvest, t_phase1, t_phase2)) = match protocol.kind {
        EhKind::NoEh => (1.0, 1.0, None, half),
        EhKind::PowerSplitting { rho } => {
            warn_full_split(rho);
            (2.0, 1.0 - rho, Some(eta * rho), half)
        }
        // the Ψ expressions share their sub-terms so that Hybrid reduces bit-exactly
        EhKind::TimeSwitching { beta } => (2.0 / (beta + 1.0), 1.0, Some(eta * ts_ratio(beta)), split(beta)),
        EhKind::Hybrid { beta, rho } => {
            warn_full_split(rho);
            (2.0 / (beta + 1.0), 1.0 - rho, Some(eta * (rho + ts_ratio(beta))), split(beta))
        }
    };
    Ok(DerivedPower { phi, varpi, psi, t_harvest, t_phase1, t_phase2 })
}

fn ts_ratio(beta: f64) -> f64 {
    2.0 * beta / (1.0 - beta)
}

fn warn_full_split(rho: f64) {
    if rho == 1.0 {
        log::warn!("rho = 1 routes no power to the information decoder; relay decisions are coin flips");
    }
}

/// Energy collected over one block at source power `ps` and S→R gain `g_r`.
pub fn harvested_energy(protocol: &EhProtocol, ps: f64, g_r: f64) -> Result<f64> {
    protocol.validate()?;
    check_power_and_gain(ps, g_r)?;
    let eta = protocol.eta;
    match protocol.kind {
        EhKind::NoEh => Err(Error::NotApplicable("the no-EH relay harvests nothing".into())),
        EhKind::PowerSplitting { rho } => Ok(eta * ps * rho * 0.5 * g_r),
        EhKind::TimeSwitching { beta } => Ok(eta * ps * beta * g_r),
        EhKind::Hybrid { beta, rho } => Ok(eta * ps * (2.0 * beta + rho * (1.0 - beta)) / 2.0 * g_r),
    }
}

/// Relay transmit power: the harvested energy spent over phase 2, or P_s
/// for a battery-powered relay.
pub fn relay_power(ps: f64, g_r: f64, dp: &DerivedPower) -> Result<f64> {
    check_power_and_gain(ps, g_r)?;
    Ok(match dp.psi {
        Some(psi) => ps * g_r * psi,
        None => ps,
    })
}

fn check_power_and_gain(ps: f64, g_r: f64) -> Result<()> {
    if !(ps > 0.0) || !ps.is_finite() {
        return Err(Error::InvalidParameter(format!("source power must be positive, got {ps}")));
    }
    if !(g_r >= 0.0) || !g_r.is_finite() {
        return Err(Error::InvalidParameter(format!("power gain must be non-negative, got {g_r}")));
    }
    Ok(())
}

/// Superposition-coding power shares, α₁ for U₁ and α₂ for U₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl PowerAllocation {
    /// Allocation with α₂ given and α₁ = 1 - α₂; α₂ must lie in (0, 0.5].
    pub fn from_alpha2(alpha2: f64) -> Result<Self> {
        let pa = Self { alpha1: 1.0 - alpha2, alpha2 };
        pa.validate()?;
        Ok(pa)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.alpha1 + self.alpha2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "power shares must sum to 1, got {} + {}",
                self.alpha1, self.alpha2
            )));
        }
        if !(self.alpha2 > 0.0 && self.alpha2 <= self.alpha1) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < alpha2 <= alpha1, got alpha2 = {}",
                self.alpha2
            )));
        }
        Ok(())
    }
}

/// NU_J[j] multiplies Q(√(c ζ_j g)) in the U₂ conditional BER.
pub const NU_J: [i32; 5] = [2, -1, 1, 1, -1];

/// Squared decision distances of the superposed BPSK constellation.
///
/// `zeta_i` serves the direct detection of s₁ (averaged over s₂ = ±1).
/// `zeta_j` serves SIC detection of s₂: the α₂ term for correct s₁, and four
/// terms covering the events where s₁ is wrong and the cancelled symbol is
/// flipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstellationWeights {
    pub zeta_i: [f64; 2],
    pub zeta_j: [f64; 5],
    pub nu_j: [i32; 5],
}

pub fn constellation_weights(pa: &PowerAllocation) -> ConstellationWeights {
    let a = pa.alpha1.sqrt();
    let b = pa.alpha2.sqrt();
    ConstellationWeights {
        zeta_i: [(a + b).powi(2), (a - b).powi(2)],
        // after a wrong s₁ decision the SIC residual sits at 2√α₁ ± √α₂
        zeta_j: [pa.alpha2, (a + b).powi(2), (2.0 * a + b).powi(2), (a - b).powi(2), (2.0 * a - b).powi(2)],
        nu_j: NU_J,
    }
}
