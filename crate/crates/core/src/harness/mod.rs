//! Experiment driver: expands a configuration into operating points, runs the
//! analytical engine and/or the simulator on each, and writes result files.

mod config;
mod optimize;
mod output;

pub use config::{config_digest, ExperimentConfig, Grid, Mode, Objective, ScenarioRef};
pub use optimize::{optimize_alpha, optimize_eh, AlphaOptimum, EhOptimum};
pub use output::{
    read_results, read_rows, write_results, write_rows, PointFailure, PointRecord, ResultRow, RunManifest, Stage,
    CSV_HEADER,
};

use rayon::prelude::*;

use crate::analytic::{e2e_aber, AberBreakdown, Provenance};
use crate::channel::{Scenario, User};
use crate::error::{Error, Result};
use crate::protocol::{EhProtocol, PowerAllocation};
use crate::simulator::{build_pool, derive_batch_seed, run_point, PointOutcome, SimConfig, StoppingRule};

/// What varies across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Total SNR, at fixed α₂.
    Snr { snr_db: Vec<f64>, alpha2: f64 },
    /// α₂, at fixed SNR.
    Alpha2 { alpha2: Vec<f64>, snr_db: f64 },
    /// Hybrid (β, ρ) grid at fixed SNR and α₂. The protocol list is ignored.
    EhGrid { beta: Vec<f64>, rho: Vec<f64>, alpha2: f64, snr_db: f64, eta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenarios: Vec<Scenario>,
    pub protocols: Vec<EhProtocol>,
    pub axis: SweepAxis,
    pub mode: Mode,
    pub stop: StoppingRule,
    pub master_seed: u64,
}

/// One operating point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub scenario: Scenario,
    pub protocol: EhProtocol,
    pub alpha2: f64,
    pub snr_db: f64,
}

impl Point {
    pub fn seed(&self, master_seed: u64) -> u64 {
        derive_batch_seed(master_seed, self.index as u64)
    }
}

impl SweepSpec {
    /// Builds the spec for one of the sweep kinds from a configuration.
    pub fn from_config(cfg: &ExperimentConfig, axis_kind: AxisKind, mode: Mode) -> Result<Self> {
        let axis = match axis_kind {
            AxisKind::Snr => SweepAxis::Snr { snr_db: cfg.snr_db.values()?, alpha2: cfg.alpha2 },
            AxisKind::Alpha2 => SweepAxis::Alpha2 { alpha2: cfg.alpha2_grid.values()?, snr_db: cfg.fixed_snr_db },
            AxisKind::EhGrid => SweepAxis::EhGrid {
                beta: cfg.beta_grid.values()?,
                rho: cfg.rho_grid.values()?,
                alpha2: cfg.alpha2,
                snr_db: cfg.fixed_snr_db,
                eta: cfg.eta,
            },
        };
        let spec = Self {
            scenarios: cfg.resolved_scenarios()?,
            protocols: cfg.resolved_protocols()?,
            axis,
            mode,
            stop: cfg.stop,
            master_seed: cfg.seed,
        };
        spec.points()?;
        Ok(spec)
    }

    /// Points in output order: scenario, then protocol (or β, ρ), then grid.
    pub fn points(&self) -> Result<Vec<Point>> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("sweep has no scenarios".into()));
        }
        let mut out = Vec::new();
        let mut push = |scenario: &Scenario, protocol: EhProtocol, alpha2: f64, snr_db: f64| {
            let index = out.len();
            out.push(Point { index, scenario: scenario.clone(), protocol, alpha2, snr_db });
        };
        match &self.axis {
            SweepAxis::Snr { snr_db, alpha2 } => {
                if snr_db.is_empty() || self.protocols.is_empty() {
                    return Err(Error::Config("empty SNR sweep".into()));
                }
                for sc in &self.scenarios {
                    for &p in &self.protocols {
                        for &s in snr_db {
                            push(sc, p, *alpha2, s);
                        }
                    }
                }
            }
            SweepAxis::Alpha2 { alpha2, snr_db } => {
                if alpha2.is_empty() || self.protocols.is_empty() {
                    return Err(Error::Config("empty alpha2 sweep".into()));
                }
                for sc in &self.scenarios {
                    for &p in &self.protocols {
                        for &a in alpha2 {
                            push(sc, p, a, *snr_db);
                        }
                    }
                }
            }
            SweepAxis::EhGrid { beta, rho, alpha2, snr_db, eta } => {
                if beta.is_empty() || rho.is_empty() {
                    return Err(Error::Config("empty harvesting grid".into()));
                }
                for sc in &self.scenarios {
                    for &b in beta {
                        for &r in rho {
                            push(sc, EhProtocol::hybrid(b, r, *eta)?, *alpha2, *snr_db);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Sweep kinds selectable from a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Snr,
    Alpha2,
    EhGrid,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub points: Vec<PointRecord>,
    pub failures: Vec<PointFailure>,
}

struct PointResult {
    analytic: Option<AberBreakdown>,
    sim: Option<PointOutcome>,
}

fn eval_point(spec: &SweepSpec, p: &Point, analytic: bool, sim: bool) -> Result<PointResult> {
    let pa = PowerAllocation::from_alpha2(p.alpha2)?;
    let a = if analytic { Some(e2e_aber(&p.scenario, &p.protocol, &pa, p.snr_db)?) } else { None };
    let s = if sim {
        let cfg = SimConfig {
            scenario: p.scenario.clone(),
            protocol: p.protocol,
            pa,
            total_snr_db: p.snr_db,
            master_seed: p.seed(spec.master_seed),
            stop: spec.stop,
        };
        Some(run_point(&cfg)?)
    } else {
        None
    };
    Ok(PointResult { analytic: a, sim: s })
}

fn rows_for(p: &Point, r: &PointResult) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(6);
    for user in [User::U1, User::U2] {
        for stage in [Stage::Relay, Stage::Phase2, Stage::E2e] {
            let ana = r.analytic.map(|a| match stage {
                Stage::Relay => a.relay(user),
                Stage::Phase2 => a.phase2(user),
                Stage::E2e => a.e2e(user),
            });
            let est = r.sim.map(|o| match stage {
                Stage::Relay => o.counts.relay(user),
                Stage::Phase2 => o.counts.phase2(user),
                Stage::E2e => o.counts.e2e(user),
            });
            rows.push(ResultRow {
                scenario: p.scenario.name.clone(),
                protocol: p.protocol.label().to_string(),
                beta: p.protocol.beta(),
                rho: p.protocol.rho(),
                eta: p.protocol.harvests().then_some(p.protocol.eta),
                alpha2: p.alpha2,
                snr_db: p.snr_db,
                user: user.index(),
                stage,
                ber_analytic: ana,
                ber_mc: est.map(|e| e.ber),
                n_bits: est.map(|e| e.n_bits),
                n_errors: est.map(|e| e.n_errors),
                ci95: est.map(|e| e.ci95_halfwidth),
            });
        }
    }
    rows
}

/// Runs every point of `spec` on a pool of `workers` threads.
///
/// Analytical points are spread across the pool; each simulated point spreads
/// its batches instead. Output does not depend on `workers`. A point that
/// fails is logged and recorded, and the sweep carries on.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepOutput> {
    let points = spec.points()?;
    let pool = build_pool(workers)?;
    let results: Vec<Result<PointResult>> = pool.install(|| {
        if spec.mode.simulate() {
            points.iter().map(|p| eval_point(spec, p, spec.mode.analytic(), true)).collect()
        } else {
            points.par_iter().map(|p| eval_point(spec, p, true, false)).collect()
        }
    });

    let mut out = SweepOutput::default();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(r) => {
                out.rows.extend(rows_for(p, &r));
                out.points.push(PointRecord {
                    index: p.index,
                    scenario: p.scenario.name.clone(),
                    protocol: p.protocol.label().to_string(),
                    alpha2: p.alpha2,
                    snr_db: p.snr_db,
                    seed: r.sim.map(|_| p.seed(spec.master_seed)),
                    batches: r.sim.map(|o| o.batches),
                    budget_exhausted: r.sim.is_some_and(|o| o.budget_exhausted),
                    analytic_fallback: r.analytic.is_some_and(|a| {
                        a.phase2_u1_source == Provenance::OracleFallback
                            || a.phase2_u2_source == Provenance::OracleFallback
                    }),
                });
            }
            Err(e) => {
                log::warn!("point {} ({} {}) failed: {e}", p.index, p.scenario.name, p.protocol.label());
                out.failures.push(PointFailure {
                    index: p.index,
                    scenario: p.scenario.name.clone(),
                    protocol: p.protocol.label().to_string(),
                    kind: e.kind().to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}
