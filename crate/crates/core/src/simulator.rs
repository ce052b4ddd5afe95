//! Bit-true Monte Carlo of the two-hop chain: superposition coding at the
//! source, detection and SIC at the relay, re-encoding with the harvested
//! power, detection and SIC at the users.
//!
//! Frames are grouped into fixed-size batches, each with its own seed derived
//! from the point seed and the batch index. Batches run in rounds whose sizes
//! do not depend on the worker count, and are merged in index order with the
//! stopping rule checked after every batch, so a point's tallies are a pure
//! function of its configuration and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{GainSampler, Scenario, User};
use crate::error::{Error, Result};
use crate::protocol::{derive_power, DerivedPower, EhProtocol, PowerAllocation};

pub const BATCH_FRAMES: u64 = 65_536;
/// Batches per round. The last entry repeats.
const ROUND_SIZES: [usize; 8] = [1, 1, 2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Errors required on every tracked counter.
    pub min_errors: u64,
    /// Frame budget; each frame carries one bit per user.
    pub max_bits: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { min_errors: 400, max_bits: 100_000_000 }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_errors < 100 {
            return Err(Error::InvalidParameter(format!("min_errors must be at least 100, got {}", self.min_errors)));
        }
        if self.max_bits == 0 {
            return Err(Error::InvalidParameter("max_bits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub protocol: EhProtocol,
    pub pa: PowerAllocation,
    /// P_T/N₀ in dB.
    pub total_snr_db: f64,
    pub master_seed: u64,
    pub stop: StoppingRule,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.protocol.validate()?;
        self.pa.validate()?;
        self.stop.validate()?;
        if self.total_snr_db.is_nan() || self.total_snr_db == f64::INFINITY {
            return Err(Error::InvalidParameter(format!("total SNR must be finite, got {}", self.total_snr_db)));
        }
        Ok(())
    }
}

/// Error tallies. Relay counters compare relay decisions with source bits,
/// phase-2 counters compare user decisions with the bits the relay sent, and
/// e2e counters compare user decisions with source bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub bits: u64,
    pub relay_err_s1: u64,
    pub relay_err_s2: u64,
    pub phase2_err_u1: u64,
    pub phase2_err_u2: u64,
    pub e2e_err_u1: u64,
    pub e2e_err_u2: u64,
}

impl TrialCounts {
    pub fn merge(&mut self, other: &TrialCounts) {
        self.bits += other.bits;
        self.relay_err_s1 += other.relay_err_s1;
        self.relay_err_s2 += other.relay_err_s2;
        self.phase2_err_u1 += other.phase2_err_u1;
        self.phase2_err_u2 += other.phase2_err_u2;
        self.e2e_err_u1 += other.e2e_err_u1;
        self.e2e_err_u2 += other.e2e_err_u2;
    }

    pub fn merged(mut self, other: &TrialCounts) -> Self {
        self.merge(other);
        self
    }

    fn error_counters(&self) -> [u64; 6] {
        [
            self.relay_err_s1,
            self.relay_err_s2,
            self.phase2_err_u1,
            self.phase2_err_u2,
            self.e2e_err_u1,
            self.e2e_err_u2,
        ]
    }

    pub fn min_errors(&self) -> u64 {
        self.error_counters().into_iter().min().unwrap_or(0)
    }

    pub fn relay(&self, user: User) -> BerEstimate {
        BerEstimate::new(self.bits, if user == User::U1 { self.relay_err_s1 } else { self.relay_err_s2 })
    }

    pub fn phase2(&self, user: User) -> BerEstimate {
        BerEstimate::new(self.bits, if user == User::U1 { self.phase2_err_u1 } else { self.phase2_err_u2 })
    }

    pub fn e2e(&self, user: User) -> BerEstimate {
        BerEstimate::new(self.bits, if user == User::U1 { self.e2e_err_u1 } else { self.e2e_err_u2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub ber: f64,
    pub n_bits: u64,
    pub n_errors: u64,
    /// Normal-approximation 95% half-width.
    pub ci95_halfwidth: f64,
}

impl BerEstimate {
    pub fn new(n_bits: u64, n_errors: u64) -> Self {
        if n_bits == 0 {
            return Self { ber: f64::NAN, n_bits, n_errors, ci95_halfwidth: f64::NAN };
        }
        let n = n_bits as f64;
        let ber = n_errors as f64 / n;
        Self { ber, n_bits, n_errors, ci95_halfwidth: 1.96 * (ber * (1.0 - ber) / n).sqrt() }
    }

    /// Binomial standard error at a reference probability p.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub counts: TrialCounts,
    /// The bit budget ran out before every counter reached `min_errors`.
    pub budget_exhausted: bool,
    pub batches: u64,
}

/// BPSK decision for s₁ with s₂ treated as noise: the sign of the matched
/// filter output, ties resolved to +1. For α₁ >= α₂ this is the ML rule, and
/// it needs neither the gain nor the power.
#[inline]
pub fn detect_s1(y: f64, _h_gain: f64, _tx_power: f64, _pa: &PowerAllocation) -> i8 {
    if y >= 0.0 {
        1
    } else {
        -1
    }
}

/// Detect s₂ after removing the reconstructed s₁ component.
#[inline]
pub fn sic_detect_s2(y: f64, h_gain: f64, tx_power: f64, s1_hat: i8, pa: &PowerAllocation) -> i8 {
    let residual = y - (tx_power * pa.alpha1 * h_gain).sqrt() * s1_hat as f64;
    if residual >= 0.0 {
        1
    } else {
        -1
    }
}

/// Seed of batch `batch_index` under `master_seed`.
///
/// Counter-mode splitmix64: the counter is spread by an odd constant, which
/// is a bijection mod 2⁶⁴, and then passed through the splitmix finalizer,
/// another bijection. Distinct indices therefore never collide.
pub fn derive_batch_seed(master_seed: u64, batch_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(batch_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-point constants shared by every frame.
#[derive(Debug, Clone, Copy)]
struct Link {
    pa: PowerAllocation,
    dp: DerivedPower,
    ps: f64,
    sigma: f64,
    sqrt_a1: f64,
    sqrt_a2: f64,
    g_r: GainSampler,
    g_1: GainSampler,
    g_2: GainSampler,
}

impl Link {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let dp = derive_power(&cfg.protocol)?;
        // P_T = 1, so N₀ = 10^{-snr/10}
        let n0 = 10f64.powf(-cfg.total_snr_db / 10.0);
        Ok(Self {
            pa: cfg.pa,
            dp,
            ps: dp.phi,
            sigma: n0.sqrt(),
            sqrt_a1: cfg.pa.alpha1.sqrt(),
            sqrt_a2: cfg.pa.alpha2.sqrt(),
            g_r: GainSampler::new(cfg.scenario.relay_link)?,
            g_1: GainSampler::new(cfg.scenario.user1_link)?,
            g_2: GainSampler::new(cfg.scenario.user2_link)?,
        })
    }

    #[inline]
    fn noise<R: Rng>(&self, rng: &mut R) -> f64 {
        let n: f64 = StandardNormal.sample(rng);
        self.sigma * n
    }

    #[inline]
    fn superpose(&self, s1: i8, s2: i8) -> f64 {
        self.sqrt_a1 * s1 as f64 + self.sqrt_a2 * s2 as f64
    }

    fn run_batch(&self, seed: u64, frames: u64) -> TrialCounts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = TrialCounts { bits: frames, ..Default::default() };
        let relay_rx_power = self.ps * self.dp.varpi;
        for _ in 0..frames {
            let word: u32 = rng.random();
            let s1: i8 = if word & 1 == 0 { 1 } else { -1 };
            let s2: i8 = if word & 2 == 0 { 1 } else { -1 };
            let g_r = self.g_r.sample(&mut rng);
            let g_1 = self.g_1.sample(&mut rng);
            let g_2 = self.g_2.sample(&mut rng);

            // phase 1: S → R, a share ϖ of the received power reaches the decoder
            let y_r = (relay_rx_power * g_r).sqrt() * self.superpose(s1, s2) + self.noise(&mut rng);
            let r1 = detect_s1(y_r, g_r, relay_rx_power, &self.pa);
            let r2 = sic_detect_s2(y_r, g_r, relay_rx_power, r1, &self.pa);

            // phase 2: R re-encodes its decisions with power drawn from this frame's g_r
            let pr = match self.dp.psi {
                Some(psi) => self.ps * g_r * psi,
                None => self.ps,
            };
            let x_r = self.superpose(r1, r2);
            let y_1 = (pr * g_1).sqrt() * x_r + self.noise(&mut rng);
            let y_2 = (pr * g_2).sqrt() * x_r + self.noise(&mut rng);
            let u1 = detect_s1(y_1, g_1, pr, &self.pa);
            let u2_s1 = detect_s1(y_2, g_2, pr, &self.pa);
            let u2 = sic_detect_s2(y_2, g_2, pr, u2_s1, &self.pa);

            c.relay_err_s1 += (r1 != s1) as u64;
            c.relay_err_s2 += (r2 != s2) as u64;
            c.phase2_err_u1 += (u1 != r1) as u64;
            c.phase2_err_u2 += (u2 != r2) as u64;
            c.e2e_err_u1 += (u1 != s1) as u64;
            c.e2e_err_u2 += (u2 != s2) as u64;
        }
        c
    }
}

/// Simulates one operating point on the current rayon pool.
pub fn run_point(cfg: &SimConfig) -> Result<PointOutcome> {
    cfg.validate()?;
    let link = Link::new(cfg)?;
    let stop = cfg.stop;
    let total_batches = stop.max_bits.div_ceil(BATCH_FRAMES);
    let frames_in = |b: u64| BATCH_FRAMES.min(stop.max_bits - b * BATCH_FRAMES);

    let mut acc = TrialCounts::default();
    let mut next = 0u64;
    let mut round = 0usize;
    while next < total_batches {
        let size = ROUND_SIZES[round.min(ROUND_SIZES.len() - 1)] as u64;
        let end = (next + size).min(total_batches);
        let results: Vec<TrialCounts> = (next..end)
            .into_par_iter()
            .map(|b| link.run_batch(derive_batch_seed(cfg.master_seed, b), frames_in(b)))
            .collect();
        for (b, r) in (next..end).zip(&results) {
            acc.merge(r);
            if acc.min_errors() >= stop.min_errors {
                return Ok(PointOutcome { counts: acc, budget_exhausted: false, batches: b + 1 });
            }
        }
        next = end;
        round += 1;
    }
    Ok(PointOutcome { counts: acc, budget_exhausted: true, batches: total_batches })
}

/// As [`run_point`], on a dedicated pool of `workers` threads.
pub fn run_point_with_workers(cfg: &SimConfig, workers: usize) -> Result<PointOutcome> {
    build_pool(workers)?.install(|| run_point(cfg))
}

pub fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidParameter("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::q_function;

    fn cfg(protocol: EhProtocol, snr: f64, seed: u64, max_bits: u64) -> SimConfig {
        SimConfig {
            scenario: Scenario::preset_by_name("I").unwrap(),
            protocol,
            pa: PowerAllocation::from_alpha2(0.1).unwrap(),
            total_snr_db: snr,
            master_seed: seed,
            stop: StoppingRule { min_errors: 400, max_bits },
        }
    }

    #[test]
    fn noiseless_detection() {
        let pa = PowerAllocation::from_alpha2(0.1).unwrap();
        let (p, g) = (2.0f64, 0.7f64);
        for s1 in [-1i8, 1] {
            for s2 in [-1i8, 1] {
                let y = (p * g).sqrt() * (pa.alpha1.sqrt() * s1 as f64 + pa.alpha2.sqrt() * s2 as f64);
                let d1 = detect_s1(y, g, p, &pa);
                assert_eq!(d1, s1);
                assert_eq!(sic_detect_s2(y, g, p, d1, &pa), s2);
            }
        }
        assert_eq!(detect_s1(0.0, g, p, &pa), 1);
    }

    #[test]
    fn wrong_cancellation_propagates() {
        let pa = PowerAllocation::from_alpha2(0.1).unwrap();
        let (p, g) = (1.0f64, 1.0f64);
        // s₁ = +1, s₂ = +1 sent, s₁ wrongly decided as -1: residual 2√α₁ + √α₂ > 0
        let y = pa.alpha1.sqrt() + pa.alpha2.sqrt();
        assert_eq!(sic_detect_s2(y, g, p, -1, &pa), 1);
        // s₂ = -1: residual 2√α₁ - √α₂ still positive, so s₂ comes out wrong
        let y = pa.alpha1.sqrt() - pa.alpha2.sqrt();
        assert_eq!(sic_detect_s2(y, g, p, -1, &pa), 1);
    }

    #[test]
    fn sic_error_terms_match_corrected_weights() {
        // fixed gain isolates the conditional SIC error probability
        let pa = PowerAllocation::from_alpha2(0.1).unwrap();
        let (a, b) = (pa.alpha1.sqrt(), pa.alpha2.sqrt());
        let q = |z: f64| q_function(z.sqrt());
        let corrected = 0.5 * (2.0 * q(0.1) - q((a + b).powi(2)) + q((2.0 * a + b).powi(2)) + q((a - b).powi(2))
            - q((2.0 * a - b).powi(2)));
        let printed = 0.5
            * (2.0 * q(0.1) - q((a + b).powi(2)) + q(((2.0 * pa.alpha1).sqrt() + b).powi(2)) + q((a - b).powi(2))
                - q((2.0 * a - b).powi(2)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 2_000_000u64;
        let mut errors = 0u64;
        for _ in 0..n {
            let (s1, s2): (i8, i8) = (if rng.random() { 1 } else { -1 }, if rng.random() { 1 } else { -1 });
            let noise: f64 = StandardNormal.sample(&mut rng);
            let y = a * s1 as f64 + b * s2 as f64 + noise;
            let d1 = detect_s1(y, 1.0, 1.0, &pa);
            errors += (sic_detect_s2(y, 1.0, 1.0, d1, &pa) != s2) as u64;
        }
        let est = BerEstimate::new(n, errors);
        let se = est.std_error_at(corrected);
        assert!((est.ber - corrected).abs() < 4.0 * se, "{} vs {corrected}", est.ber);
        assert!((est.ber - printed).abs() > 20.0 * se, "{} vs {printed}", est.ber);
    }

    #[test]
    fn batch_seeds_do_not_collide() {
        let mut seen: Vec<u64> = (0..10_001).map(|i| derive_batch_seed(42, i)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 10_001);
        assert_ne!(derive_batch_seed(1, 0), derive_batch_seed(2, 0));
    }

    #[test]
    fn gains_across_batches_are_uncorrelated() {
        let p = Scenario::preset_by_name("I").unwrap().relay_link;
        let s = GainSampler::new(p).unwrap();
        let xs: Vec<f64> = (0..1_000u64)
            .flat_map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_batch_seed(9, b));
                (0..1_000).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        for lag in [1usize, 1_000, 2_000] {
            let cov: f64 = xs.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
            assert!((cov / var).abs() < 0.01, "lag {lag}: {}", cov / var);
        }
    }

    #[test]
    fn merge_is_order_independent() {
        let parts: Vec<TrialCounts> = (0..6u64)
            .map(|i| TrialCounts {
                bits: 100 + i,
                relay_err_s1: i,
                relay_err_s2: 2 * i,
                phase2_err_u1: 3 * i,
                phase2_err_u2: i * i,
                e2e_err_u1: 7,
                e2e_err_u2: i + 1,
            })
            .collect();
        let fwd = parts.iter().fold(TrialCounts::default(), |a, p| a.merged(p));
        let rev = parts.iter().rev().fold(TrialCounts::default(), |a, p| a.merged(p));
        let split = parts[..3]
            .iter()
            .fold(TrialCounts::default(), |a, p| a.merged(p))
            .merged(&parts[3..].iter().fold(TrialCounts::default(), |a, p| a.merged(p)));
        assert_eq!(fwd, rev);
        assert_eq!(fwd, split);
    }

    #[test]
    fn pure_noise_is_a_coin_flip() {
        let out = run_point(&cfg(EhProtocol::hybrid(0.1, 0.1, 0.95).unwrap(), -80.0, 5, 1_000_000)).unwrap();
        let c = out.counts;
        for e in [c.relay(User::U1), c.relay(User::U2), c.phase2(User::U1), c.phase2(User::U2)] {
            assert!((e.ber - 0.5).abs() < 4.0 * e.std_error_at(0.5), "{e:?}");
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let c = cfg(EhProtocol::hybrid(0.1, 0.1, 0.95).unwrap(), 15.0, 77, 3_000_000);
        let a = run_point_with_workers(&c, 1).unwrap();
        let b = run_point_with_workers(&c, 8).unwrap();
        let again = run_point_with_workers(&c, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, again);
    }

    #[test]
    fn budget_flag_and_exact_bit_cap() {
        let out = run_point(&cfg(EhProtocol::no_eh(), 40.0, 1, 100_000)).unwrap();
        assert!(out.budget_exhausted);
        assert_eq!(out.counts.bits, 100_000);
        let out = run_point(&cfg(EhProtocol::no_eh(), 0.0, 1, 10_000_000)).unwrap();
        assert!(!out.budget_exhausted);
        assert!(out.counts.min_errors() >= 400);
    }

    #[test]
    fn union_bound_holds() {
        let out = run_point(&cfg(EhProtocol::time_switching(0.2, 0.9).unwrap(), 10.0, 8, 2_000_000)).unwrap();
        let c = out.counts;
        assert!(c.e2e_err_u1 <= c.relay_err_s1 + c.phase2_err_u1);
        assert!(c.e2e_err_u2 <= c.relay_err_s2 + c.phase2_err_u2);
        for e in c.error_counters() {
            assert!(e <= c.bits);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = cfg(EhProtocol::no_eh(), 10.0, 1, 1000);
        c.stop.min_errors = 10;
        assert!(run_point(&c).is_err());
        c.stop.min_errors = 400;
        c.total_snr_db = f64::NAN;
        assert!(run_point(&c).is_err());
        assert!(build_pool(0).is_err());
    }
}
