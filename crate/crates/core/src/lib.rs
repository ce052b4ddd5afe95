//! Link-level simulator and analytical average-BER engine for two-user
//! cooperative NOMA through an energy-harvesting decode-and-forward relay.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod simulator;
pub mod specfun;

pub use analytic::{e2e_aber, AberBreakdown, Provenance};
pub use channel::{FadingParams, Scenario, User};
pub use error::{Error, Result};
pub use simulator::{run_point, BerEstimate, PointOutcome, SimConfig, StoppingRule, TrialCounts};
pub use protocol::{constellation_weights, derive_power, ConstellationWeights, DerivedPower, EhKind, EhProtocol, PowerAllocation};
