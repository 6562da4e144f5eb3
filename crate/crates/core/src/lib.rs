//! Solver for the full-information best-choice (secretary) problem with
//! independent but not identically distributed observations.
//!
//! The crate is organised around the objects the problem is built from:
//!
//! - [`distributions`]: observation laws, problem instances and the extremal
//!   disjoint-support family that attains the `(1-1/n)^(n-1)` lower bound.
//! - [`odds`]: the sum-the-odds rule for stopping on the last success, and the
//!   bound sequence `b_n`.
//! - [`policy`]: backward induction for the stop/continue value curves, the
//!   critical thresholds and the optimal win probability.
//! - [`reduction`]: the map from a continuous instance to a two-point
//!   "V-sequence" with no larger optimal value.
//! - [`oracle`]: exact dynamic programming for finite-support instances.
//! - [`simulate`]: seeded Monte Carlo estimation of a threshold rule.
//! - [`check`]: the randomized property suite behind `stoprule check`.

pub mod check;
pub mod distributions;
pub mod error;
pub mod numeric;
pub mod odds;
pub mod oracle;
pub mod policy;
pub mod reduction;
pub mod rng;
pub mod simulate;

pub use distributions::{make_extremal_instance, validate_instance, Distribution, ProblemInstance, ValidationReport};
pub use error::{Error, Result};
pub use odds::{bound_b, classical_secretary_value, solve_odds, verify_odds_bounds, OddsSolution, OddsVector};
pub use oracle::{oracle_optimal_value, oracle_policy_value, DiscreteInstance, OracleResult};
pub use policy::{
    compute_thresholds, compute_value_curves, optimal_value, run_policy, EngineConfig, PolicyOutcome,
    ThresholdPolicy, ValueCurves,
};
pub use reduction::{build_v_sequence, compute_c_constants, v_sequence_value, verify_reduction, ReductionReport, VSequence};
pub use rng::RandomStream;
pub use simulate::{simulate_win_probability, SimConfig, SimReport};
