//! Grid searches over the harvesting split and the power allocation, using
//! the analytical engine.

use serde::{Deserialize, Serialize};

use super::Objective;
use crate::analytic::e2e_aber;
use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::protocol::{EhProtocol, PowerAllocation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhOptimum {
    pub scenario: String,
    pub beta: f64,
    pub rho: f64,
    pub objective: Objective,
    pub value: f64,
    pub e2e_u1: f64,
    pub e2e_u2: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaOptimum {
    pub scenario: String,
    pub protocol: String,
    pub alpha2: f64,
    pub objective: Objective,
    pub value: f64,
    pub e2e_u1: f64,
    pub e2e_u2: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

fn sorted(grid: &[f64]) -> Vec<f64> {
    let mut v = grid.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Hybrid (β, ρ) minimizing `objective` at fixed SNR and α₂. Ties go to the
/// smaller β, then the smaller ρ. Cells the engine rejects are skipped.
pub fn optimize_eh(
    scenario: &Scenario,
    eta: f64,
    alpha2: f64,
    snr_db: f64,
    beta_grid: &[f64],
    rho_grid: &[f64],
    objective: Objective,
) -> Result<EhOptimum> {
    let pa = PowerAllocation::from_alpha2(alpha2)?;
    let mut best: Option<EhOptimum> = None;
    let (mut evaluated, mut skipped) = (0, 0);
    for &beta in &sorted(beta_grid) {
        for &rho in &sorted(rho_grid) {
            let ab = EhProtocol::hybrid(beta, rho, eta).and_then(|p| e2e_aber(scenario, &p, &pa, snr_db));
            let ab = match ab {
                Ok(ab) => ab,
                Err(e) => {
                    log::warn!("skipping beta={beta} rho={rho} in scenario {}: {e}", scenario.name);
                    skipped += 1;
                    continue;
                }
            };
            evaluated += 1;
            let value = objective.eval(ab.e2e_u1, ab.e2e_u2);
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(EhOptimum {
                    scenario: scenario.name.clone(),
                    beta,
                    rho,
                    objective,
                    value,
                    e2e_u1: ab.e2e_u1,
                    e2e_u2: ab.e2e_u2,
                    evaluated: 0,
                    skipped: 0,
                });
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::Config("no admissible (beta, rho) cell in the grid".into()))?;
    best.evaluated = evaluated;
    best.skipped = skipped;
    Ok(best)
}

/// α₂ minimizing `objective` for one protocol at fixed SNR. Ties go to the
/// smaller α₂.
pub fn optimize_alpha(
    scenario: &Scenario,
    protocol: &EhProtocol,
    snr_db: f64,
    alpha2_grid: &[f64],
    objective: Objective,
) -> Result<AlphaOptimum> {
    let mut best: Option<AlphaOptimum> = None;
    let (mut evaluated, mut skipped) = (0, 0);
    for &alpha2 in &sorted(alpha2_grid) {
        let ab = PowerAllocation::from_alpha2(alpha2).and_then(|pa| e2e_aber(scenario, protocol, &pa, snr_db));
        let ab = match ab {
            Ok(ab) => ab,
            Err(e) => {
                log::warn!("skipping alpha2={alpha2} in scenario {}: {e}", scenario.name);
                skipped += 1;
                continue;
            }
        };
        evaluated += 1;
        let value = objective.eval(ab.e2e_u1, ab.e2e_u2);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(AlphaOptimum {
                scenario: scenario.name.clone(),
                protocol: protocol.label().to_string(),
                alpha2,
                objective,
                value,
                e2e_u1: ab.e2e_u1,
                e2e_u2: ab.e2e_u2,
                evaluated: 0,
                skipped: 0,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::Config("no admissible alpha2 in the grid".into()))?;
    best.evaluated = evaluated;
    best.skipped = skipped;
    Ok(best)
}
