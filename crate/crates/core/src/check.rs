//! Randomized property suite: bounds, threshold monotonicity, the reduction
//! inequality and formula/oracle agreement. Backs `stoprule check`.

use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{make_extremal_instance, Distribution, ProblemInstance};
use crate::error::Result;
use crate::numeric::Probability;
use crate::odds::{bound_b, solve_odds, verify_odds_bounds, OddsVector};
use crate::oracle::oracle_optimal_value;
use crate::policy::{solve_instance, EngineConfig, MONOTONICITY_SLACK};
use crate::reduction::{build_v_sequence, v_sequence_value, VSequence};

/// Slack on `V_n >= b_n` for quadrature error.
pub const ENGINE_BOUND_SLACK: f64 = 1e-3;

/// Random odds vector with `1 <= m <= max_m`.
pub fn random_odds_vector<R: Rng>(rng: &mut R, max_m: usize) -> OddsVector {
    let m = rng.random_range(1..=max_m);
    let scale = rng.random_range(0.05..0.95);
    let p = (0..m).map(|_| rng.random_range(0.0..scale)).collect();
    OddsVector::new(p).expect("probabilities drawn from [0, 0.95)")
}

/// Random continuous law: a shifted/scaled uniform or a piecewise-linear CDF,
/// possibly with flat pieces.
pub fn random_continuous_distribution<R: Rng>(rng: &mut R) -> Distribution {
    let start = rng.random_range(-3.0..3.0);
    if rng.random_bool(0.5) {
        return Distribution::uniform(start, start + rng.random_range(0.2..4.0));
    }
    let pieces = rng.random_range(2..=5);
    let mut x = start;
    let mut xs = vec![x];
    let mut weights = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        x += rng.random_range(0.1..1.5);
        xs.push(x);
        weights.push(if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.05..1.0) });
    }
    if weights.iter().all(|w| *w == 0.0) {
        weights[0] = 1.0;
    }
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut knots = vec![(xs[0], 0.0)];
    for (j, w) in weights.iter().enumerate() {
        acc += w / total;
        let f = if j + 1 == pieces { 1.0 } else { acc.min(1.0) };
        knots.push((xs[j + 1], f));
    }
    Distribution::piecewise(&knots)
}

/// Random continuous instance with `min_n <= n <= max_n`.
pub fn random_continuous_instance<R: Rng>(rng: &mut R, min_n: usize, max_n: usize) -> ProblemInstance {
    let n = rng.random_range(min_n..=max_n);
    ProblemInstance::new((0..n).map(|_| random_continuous_distribution(rng)).collect())
        .expect("generated laws are valid")
}

/// Random V-sequence with rational jump probabilities, `2 <= n <= max_n`.
pub fn random_exact_v_sequence<R: Rng>(rng: &mut R, max_n: usize) -> VSequence<BigRational> {
    let n = rng.random_range(2..=max_n);
    let p = (1..n)
        .map(|_| {
            let d = rng.random_range(2..=12i64);
            BigRational::ratio(rng.random_range(0..=d), d)
        })
        .collect();
    VSequence::from_probabilities(p).expect("canonical spacing is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckConfig {
    pub seed: u64,
    pub instances: usize,
    pub odds_vectors: usize,
    pub v_sequences: usize,
    pub engine: EngineConfig,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            instances: 100,
            odds_vectors: 1000,
            v_sequences: 500,
            engine: EngineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, cases: usize, failures: Vec<String>) -> Self {
        Self {
            name,
            passed: failures.is_empty(),
            cases,
            failures: failures.len(),
            detail: failures.into_iter().take(3).collect::<Vec<_>>().join("; "),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

pub fn run_checks(cfg: &CheckConfig) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    // b_n strictly decreasing and above 1/e
    let inv_e = (-1.0f64).exp();
    let mut failures = Vec::new();
    let mut prev = f64::INFINITY;
    for n in 1..=10_000 {
        let b = bound_b(n)?;
        if !(b < prev && b > inv_e) {
            failures.push(format!("b_{n} = {b}"));
        }
        prev = b;
    }
    checks.push(CheckOutcome::new("bound_sequence", 10_000, failures));

    // last-success bound and reversed-form identity
    let mut failures = Vec::new();
    let mut applicable = 0;
    for _ in 0..cfg.odds_vectors {
        let odds = random_odds_vector(&mut rng, 12);
        let report = verify_odds_bounds(&odds);
        if report.applicable {
            applicable += 1;
            if report.bound_holds != Some(true) || report.exceeds_inv_e != Some(true) {
                failures.push(format!("{:?}: v = {} < b = {}", odds.p(), report.v, report.bound_b));
            }
        }
        let sol = solve_odds(&odds);
        if let Some(vr) = sol.v_reversed {
            if (vr - sol.v).abs() > 1e-12 {
                failures.push(format!("{:?}: reversed form {vr} != {}", odds.p(), sol.v));
            }
        }
    }
    checks.push(CheckOutcome::new("odds_bound", applicable, failures));

    // engine properties on random continuous instances
    let instances: Vec<ProblemInstance> = (0..cfg.instances)
        .map(|_| random_continuous_instance(&mut rng, 2, 8))
        .collect();
    let engine = cfg.engine;
    let results: Vec<(Option<String>, Option<String>, Option<String>)> = instances
        .par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let n = inst.len();
            let mut bound = None;
            let mut mono = None;
            let mut reduce = None;
            match solve_instance(inst, &engine) {
                Ok(sol) => {
                    let b = bound_b(n).expect("n >= 1");
                    if sol.value < b - ENGINE_BOUND_SLACK {
                        bound = Some(format!("instance {idx}: V = {} < b_{n} = {b}", sol.value));
                    }
                    if !sol.policy.is_monotone(MONOTONICITY_SLACK) {
                        mono = Some(format!("instance {idx}: thresholds {:?}", sol.policy.thresholds));
                    }
                }
                Err(e) => bound = Some(format!("instance {idx}: {e}")),
            }
            match build_v_sequence(inst, &engine) {
                Ok(r) if r.inequality_holds && r.oracle_agrees => {}
                Ok(r) => {
                    reduce = Some(format!(
                        "instance {idx}: original {} reduced {} oracle {}",
                        r.value_original, r.value_reduced, r.value_reduced_oracle
                    ))
                }
                Err(e) => reduce = Some(format!("instance {idx}: {e}")),
            }
            (bound, mono, reduce)
        })
        .collect();
    type Findings = (Option<String>, Option<String>, Option<String>);
    let collect = |pick: fn(&Findings) -> &Option<String>| {
        results.iter().filter_map(|r| pick(r).clone()).collect::<Vec<_>>()
    };
    checks.push(CheckOutcome::new("engine_lower_bound", instances.len(), collect(|r| &r.0)));
    checks.push(CheckOutcome::new("threshold_monotonicity", instances.len(), collect(|r| &r.1)));
    checks.push(CheckOutcome::new("reduction_inequality", instances.len(), collect(|r| &r.2)));

    // extremal family attains the bound
    let mut failures = Vec::new();
    for n in 2..=8 {
        let v = solve_instance(&make_extremal_instance(n)?, &engine)?.value;
        let b = bound_b(n)?;
        if (v - b).abs() > ENGINE_BOUND_SLACK {
            failures.push(format!("n = {n}: V = {v}, b = {b}"));
        }
    }
    checks.push(CheckOutcome::new("extremal_attainment", 7, failures));

    // V-sequence formula against the exact oracle
    let mut failures = Vec::new();
    for _ in 0..cfg.v_sequences {
        let v = random_exact_v_sequence(&mut rng, 6);
        let formula = v_sequence_value(&v);
        let oracle = oracle_optimal_value(&v.to_discrete()?)?.value;
        if formula != oracle {
            failures.push(format!("p = {:?}: formula {formula} oracle {oracle}", v.p_high));
        }
        if formula.to_f64() < bound_b(v.n())? - 1e-12 {
            failures.push(format!("p = {:?}: value {formula} below b_n", v.p_high));
        }
    }
    checks.push(CheckOutcome::new("oracle_equivalence", cfg.v_sequences, failures));

    Ok(CheckReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_produce_valid_objects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let d = random_continuous_distribution(&mut rng);
            assert!(d.validate().is_ok(), "{d:?}");
            assert!(!d.has_atom());
            let v = random_exact_v_sequence(&mut rng, 6);
            assert!((2..=6).contains(&v.n()));
        }
    }

    #[test]
    fn small_suite_passes() {
        let cfg = CheckConfig {
            instances: 6,
            odds_vectors: 50,
            v_sequences: 20,
            engine: EngineConfig::with_grid(512),
            ..CheckConfig::default()
        };
        let report = run_checks(&cfg).unwrap();
        assert!(report.passed, "{report:?}");
    }
}
