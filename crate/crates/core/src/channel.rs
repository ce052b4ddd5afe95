//! Nakagami-m fading: link parameters, power-gain sampling and density.
//!
//! With a Nakagami-m envelope |h| of spread Ω, the power gain |h|² is
//! Gamma(shape m, scale Ω/m). Detection is coherent BPSK, so the phase never
//! matters and only the power gain is modelled.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{ln_gamma, reg_lower_gamma};

/// Shape m and spread Ω of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub m: f64,
    pub omega: f64,
}

impl FadingParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        let p = Self { m, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5) || !self.m.is_finite() {
            return Err(Error::InvalidParameter(format!("Nakagami shape m must be >= 0.5, got {}", self.m)));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::InvalidParameter(format!("Nakagami spread must be positive, got {}", self.omega)));
        }
        Ok(())
    }

    /// Gamma scale parameter θ = Ω/m.
    pub fn scale(&self) -> f64 {
        self.omega / self.m
    }
}

/// The three links of one deployment: S→R, R→U₁, R→U₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub relay_link: FadingParams,
    pub user1_link: FadingParams,
    pub user2_link: FadingParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.relay_link.validate()?;
        self.user1_link.validate()?;
        self.user2_link.validate()
    }

    /// R→U_k link for k in {1, 2}.
    pub fn user_link(&self, user: User) -> FadingParams {
        match user {
            User::U1 => self.user1_link,
            User::U2 => self.user2_link,
        }
    }

    fn preset(name: &str, omega: [f64; 3], m: f64) -> Self {
        Self {
            name: name.to_string(),
            relay_link: FadingParams { m, omega: omega[0] },
            user1_link: FadingParams { m, omega: omega[1] },
            user2_link: FadingParams { m, omega: omega[2] },
        }
    }

    /// Built-in scenarios I to IV.
    pub fn preset_by_name(name: &str) -> Option<Self> {
        match name {
            "I" => Some(Self::preset("I", [10.0, 2.0, 10.0], 1.5)),
            "II" => Some(Self::preset("II", [2.0, 2.0, 10.0], 1.5)),
            "III" => Some(Self::preset("III", [10.0, 2.0, 10.0], 1.0)),
            "IV" => Some(Self::preset("IV", [8.0, 4.0, 12.0], 1.5)),
            _ => None,
        }
    }

    pub fn presets() -> Vec<Self> {
        ["I", "II", "III", "IV"].iter().filter_map(|n| Self::preset_by_name(n)).collect()
    }
}

/// User index. U₁ is the near (strong-allocation) user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum User {
    U1,
    U2,
}

impl User {
    pub fn index(self) -> u8 {
        match self {
            User::U1 => 1,
            User::U2 => 2,
        }
    }
}

/// Reusable sampler; building the Gamma distribution once per link avoids
/// repeating the Marsaglia–Tsang setup for every frame.
#[derive(Debug, Clone, Copy)]
pub struct GainSampler {
    dist: Gamma<f64>,
}

impl GainSampler {
    pub fn new(params: FadingParams) -> Result<Self> {
        params.validate()?;
        let dist = Gamma::new(params.m, params.scale())
            .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
        Ok(Self { dist })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

/// One draw of |h|² ~ Gamma(m, Ω/m).
pub fn sample_power_gain<R: Rng + ?Sized>(params: FadingParams, rng: &mut R) -> Result<f64> {
    Ok(GainSampler::new(params)?.sample(rng))
}

/// Density of |h|² at g.
pub fn power_gain_pdf(params: FadingParams, g: f64) -> Result<f64> {
    params.validate()?;
    if g < 0.0 || g.is_nan() {
        return Err(Error::Domain(format!("power gain must be non-negative, got {g}")));
    }
    let theta = params.scale();
    let m = params.m;
    if g == 0.0 {
        return Ok(if m < 1.0 {
            f64::INFINITY
        } else if m == 1.0 {
            1.0 / theta
        } else {
            0.0
        });
    }
    let ln = (m - 1.0) * g.ln() - g / theta - m * theta.ln() - ln_gamma(m)?;
    Ok(ln.exp())
}

/// Distribution function of |h|² at g.
pub fn power_gain_cdf(params: FadingParams, g: f64) -> Result<f64> {
    params.validate()?;
    if g <= 0.0 {
        return Ok(0.0);
    }
    reg_lower_gamma(params.m, g / params.scale())
}
