//! Reduction of a continuous instance to a two-point "V-sequence".
//!
//! Given the first critical value `x1*`, every later `X_i` is collapsed to
//! `a_i` when `X_i > x1*` and to `b_i` otherwise, with
//! `x1* = a_1 < a_2 < ... < a_n` and `a_1 > b_2 > ... > b_n`. The collapsed
//! sequence never has a larger optimal value, and its value depends only on
//! `p_i = P(X_i > x1*)`: stopping at once wins with `prod (1 - p_i)`, while
//! continuing is exactly the last-success problem on `p_2..p_n`.

use num_rational::BigRational;
use serde::Serialize;

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::numeric::{Probability, FLOAT_TOLERANCE};
use crate::odds::odds_value;
use crate::oracle::{oracle_optimal_value, DiscreteInstance};
use crate::policy::{solve_instance, stop_probability, EngineConfig};

/// `value_original >= value_reduced - REDUCTION_TOLERANCE` counts as holding.
pub const REDUCTION_TOLERANCE: f64 = 1e-6;

/// Deterministic `Y_1 = a_1` followed by two-point `Y_i ∈ {b_i, a_i}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VSequence<P = f64> {
    /// `a_1..a_n`.
    pub a: Vec<f64>,
    /// `b_2..b_n`.
    pub b: Vec<f64>,
    /// `P(Y_i = a_i)` for `i = 2..n`.
    pub p_high: Vec<P>,
}

impl<P: Probability> VSequence<P> {
    pub fn new(a: Vec<f64>, b: Vec<f64>, p_high: Vec<P>) -> Result<Self> {
        let n = a.len();
        if n == 0 || b.len() + 1 != n || p_high.len() + 1 != n {
            return Err(Error::Validation(format!(
                "V-sequence needs n a-values and n-1 b- and p-values (got {}, {}, {})",
                n,
                b.len(),
                p_high.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::Validation("V-sequence values must be finite".into()));
        }
        if a.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("V-sequence requires a_1 < a_2 < ... < a_n".into()));
        }
        if n > 1 && (b[0] >= a[0] || b.windows(2).any(|w| w[1] >= w[0])) {
            return Err(Error::Validation("V-sequence requires a_1 > b_2 > ... > b_n".into()));
        }
        if let Some(p) = p_high.iter().find(|p| !(**p >= P::zero() && **p <= P::one())) {
            return Err(Error::Validation(format!("V-sequence probability {p:?} outside [0, 1]")));
        }
        Ok(Self { a, b, p_high })
    }

    /// A V-sequence with the canonical spacing `a_i = i`, `b_i = -i`.
    pub fn from_probabilities(p_high: Vec<P>) -> Result<Self> {
        let n = p_high.len() + 1;
        let a = (1..=n).map(|i| i as f64).collect();
        let b = (2..=n).map(|i| -(i as f64)).collect();
        Self::new(a, b, p_high)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// The same sequence as a finite-support instance (zero-probability atoms dropped).
    pub fn to_discrete(&self) -> Result<DiscreteInstance<P>> {
        let mut vars = vec![vec![(self.a[0], P::one())]];
        for ((&a, &b), p) in self.a[1..].iter().zip(&self.b).zip(&self.p_high) {
            let atoms = [(b, p.one_minus()), (a, p.clone())]
                .into_iter()
                .filter(|(_, q)| *q > P::zero())
                .collect();
            vars.push(atoms);
        }
        DiscreteInstance::new(vars)
    }
}

/// Optimal probability of stopping on the last success when some trials may
/// be sure successes.
fn last_success_value<P: Probability>(p: &[P]) -> P {
    match p.iter().rposition(|x| *x == P::one()) {
        None if p.is_empty() => P::zero(),
        None => odds_value(p),
        Some(last_sure) => {
            let tail = &p[last_sure + 1..];
            if tail.is_empty() {
                return P::one();
            }
            let stop_now = tail.iter().fold(P::one(), |acc, x| acc * x.one_minus());
            P::max_of(stop_now, last_success_value(tail))
        }
    }
}

/// `max{prod_{i>=2} (1 - p_i), v(p_2..p_n)}`: stop on `Y_1` or play the
/// last-success rule on the jumps to `a_i`.
pub fn v_sequence_value<P: Probability>(v: &VSequence<P>) -> P {
    let stop_now = v.p_high.iter().fold(P::one(), |acc, x| acc * x.one_minus());
    if v.p_high.is_empty() {
        return stop_now;
    }
    P::max_of(stop_now, last_success_value(&v.p_high))
}

/// Both branches of the V-sequence value: (stop on `Y_1`, continue).
pub fn v_sequence_branches<P: Probability>(v: &VSequence<P>) -> (P, P) {
    let stop_now = v.p_high.iter().fold(P::one(), |acc, x| acc * x.one_minus());
    (stop_now, last_success_value(&v.p_high))
}

/// Exact value of a V-sequence with rational probabilities.
pub fn v_sequence_value_exact(v: &VSequence<BigRational>) -> BigRational {
    v_sequence_value(v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub x1_star: f64,
    /// `c_2..c_{n-1}`.
    pub c: Vec<f64>,
    #[serde(flatten)]
    pub v_sequence: VSequence,
    pub value_original: f64,
    pub value_reduced: f64,
    /// Value of the V-sequence from the exact dynamic program.
    pub value_reduced_oracle: f64,
    pub oracle_agrees: bool,
    pub inequality_holds: bool,
    /// Width of the interval above `x1*` on which stopping and continuing tie.
    pub stop_interval_width: f64,
}

impl ReductionReport {
    pub fn gap(&self) -> f64 {
        self.value_original - self.value_reduced
    }
}

/// For `i = 2..n-1`, a point `c_i > x1*` with
/// `∫_{x1*}^∞ U_i dF_i = U_i(c_i) P(X_i > x1*)`.
///
/// When `P(X_i > x1*) = 0` or `U_i = 1` from `x1*` on, any `c_i > x1*` works
/// and `x1* + 1` is returned.
pub fn compute_c_constants(instance: &ProblemInstance, x1_star: f64, cfg: &EngineConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    instance.require_continuous()?;
    if !x1_star.is_finite() {
        return Err(Error::Domain("x1* must be finite".into()));
    }
    let n = instance.len();
    let (_, upper) = instance.support_hull();
    let upper = upper.max(x1_star + 1.0);
    let tol = cfg.threshold_tolerance;

    (2..n)
        .map(|i| {
            let d = instance.get(i - 1);
            let u = |x: f64| stop_probability(instance, i, x);
            let mass_above = d.sf(x1_star);
            let u0 = u(x1_star);
            if mass_above <= 0.0 || u0 >= 1.0 - 1e-15 {
                return Ok(x1_star + 1.0);
            }
            let integral = integrate_stop_value_above(instance, i, x1_star, cfg.grid_points);
            let target = (integral / mass_above).clamp(u0, 1.0);

            let c = if target - u0 <= FLOAT_TOLERANCE {
                // U_i is flat at the target level: take the right end of the plateau
                bisect(|x| u(x) <= u0 + FLOAT_TOLERANCE, x1_star, upper, tol)
            } else {
                bisect(|x| u(x) < target, x1_star, upper, tol)
            };
            Ok(if c > x1_star { c } else { x1_star + 1.0 })
        })
        .collect()
}

/// Boundary of a predicate that holds at `lo` and fails at `hi`.
fn bisect(holds: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    if !holds(lo) {
        return lo;
    }
    if holds(hi) {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `∫_{x0}^∞ U_i(x) dF_i(x)` by a quantile-space trapezoid whose nodes also
/// include every breakpoint of `F_i..F_n` above `x0`.
pub(crate) fn integrate_stop_value_above(instance: &ProblemInstance, i: usize, x0: f64, points: usize) -> f64 {
    let d = instance.get(i - 1);
    let f0 = d.cdf(x0);
    let mut nodes: Vec<f64> = (0..points)
        .map(|j| d.quantile(f0 + (1.0 - f0) * j as f64 / (points - 1) as f64))
        .filter(|&x| x > x0)
        .collect();
    nodes.push(x0);
    for later in &instance.distributions()[i - 1..] {
        nodes.extend(later.breakpoints().into_iter().filter(|&x| x > x0));
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let vals: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&x| (d.cdf(x), stop_probability(instance, i, x)))
        .collect();
    vals.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1)).sum()
}

/// Build the V-sequence for a continuous instance and compare values.
pub fn build_v_sequence(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<ReductionReport> {
    let n = instance.len();
    if n < 2 {
        return Err(Error::Domain("the reduction needs n >= 2".into()));
    }
    let solution = solve_instance(instance, cfg)?;
    let x1_star = solution.policy.thresholds[0];
    let c = compute_c_constants(instance, x1_star, cfg)?;

    let delta = c.iter().map(|ci| ci - x1_star).fold(f64::INFINITY, f64::min);
    let delta = if delta.is_finite() { delta } else { 1.0 };
    let nf = n as f64;
    let mut a = vec![x1_star];
    a.extend((2..=n).map(|i| x1_star + delta * (i - 1) as f64 / nf));
    let b: Vec<f64> = (2..=n).map(|i| x1_star - (i - 1) as f64 * delta / nf).collect();
    let p_high: Vec<f64> = (2..=n).map(|i| instance.get(i - 1).sf(x1_star)).collect();

    if let Some(j) = (2..n).find(|&j| a[j - 1] > c[j - 2]) {
        return Err(Error::Numerical(format!("a_{j} = {} exceeds c_{j} = {}", a[j - 1], c[j - 2])));
    }
    let v_sequence = VSequence::new(a, b, p_high)
        .map_err(|e| Error::Numerical(format!("constructed V-sequence is invalid: {e}")))?;

    let value_reduced = v_sequence_value(&v_sequence);
    let value_reduced_oracle = oracle_optimal_value(&v_sequence.to_discrete()?)?.value;
    let value_original = solution.value;

    Ok(ReductionReport {
        x1_star,
        c,
        value_original,
        value_reduced,
        value_reduced_oracle,
        oracle_agrees: (value_reduced - value_reduced_oracle).abs() <= FLOAT_TOLERANCE,
        inequality_holds: value_original >= value_reduced - REDUCTION_TOLERANCE,
        stop_interval_width: solution.policy.ambiguity_widths.first().copied().unwrap_or(0.0),
        v_sequence,
    })
}

/// Build the reduction and fail if the formula and the oracle disagree.
pub fn verify_reduction(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<ReductionReport> {
    let report = build_v_sequence(instance, cfg)?;
    if !report.oracle_agrees {
        return Err(Error::Numerical(format!(
            "V-sequence formula {} disagrees with the exact oracle {}",
            report.value_reduced, report.value_reduced_oracle
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_extremal_instance, Distribution};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    #[test]
    fn v_sequence_value_examples() {
        let v = VSequence::from_probabilities(vec![1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let (stop, cont) = v_sequence_branches(&v);
        assert!((stop - 4.0 / 9.0).abs() < 1e-15);
        assert!((cont - 4.0 / 9.0).abs() < 1e-15);
        assert!((v_sequence_value(&v) - 4.0 / 9.0).abs() < 1e-15);

        let v = VSequence::from_probabilities(vec![0.1, 0.1]).unwrap();
        assert!((v_sequence_value(&v) - 0.81).abs() < 1e-15);

        let v = VSequence::from_probabilities(vec![0.0; 4]).unwrap();
        assert_eq!(v_sequence_value(&v), 1.0);

        let exact = VSequence::from_probabilities(vec![rat(1, 3), rat(1, 3)]).unwrap();
        assert_eq!(v_sequence_value_exact(&exact), rat(4, 9));
    }

    #[test]
    fn sure_jumps_are_handled() {
        // Y_2 surely jumps above a_1; then stop there iff Y_3 stays low
        let v = VSequence::from_probabilities(vec![1.0, 0.3]).unwrap();
        assert!((v_sequence_value(&v) - 0.7).abs() < 1e-15);
        let oracle = oracle_optimal_value(&v.to_discrete().unwrap()).unwrap().value;
        assert!((oracle - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ordering_violations_rejected() {
        assert!(VSequence::new(vec![0.0, 1.0], vec![0.5], vec![0.5]).is_err());
        assert!(VSequence::new(vec![0.0, -1.0], vec![-0.5], vec![0.5]).is_err());
        assert!(VSequence::new(vec![0.0, 1.0, 2.0], vec![-1.0, -0.5], vec![0.5, 0.5]).is_err());
        assert!(VSequence::new(vec![0.0, 1.0], vec![-1.0], vec![1.5]).is_err());
        assert!(VSequence::new(vec![0.0, 1.0], vec![-1.0], vec![0.5]).is_ok());
    }

    #[test]
    fn c_constant_for_three_uniforms() {
        let inst = ProblemInstance::iid(Distribution::uniform(0.0, 1.0), 3).unwrap();
        let x1 = (1.0 + 6f64.sqrt()) / 5.0;
        let c = compute_c_constants(&inst, x1, &EngineConfig::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0] - (1.0 - x1 * x1) / (2.0 * (1.0 - x1))).abs() < 1e-6, "{}", c[0]);
    }

    #[test]
    fn c_constant_convention_when_no_mass_above() {
        let inst = ProblemInstance::new(vec![
            Distribution::uniform(0.0, 1.0),
            Distribution::uniform(-2.0, -1.0),
            Distribution::uniform(0.0, 1.0),
        ])
        .unwrap();
        let c = compute_c_constants(&inst, 0.5, &EngineConfig::default()).unwrap();
        assert_eq!(c, vec![1.5]);
    }

    #[test]
    fn reduction_for_three_uniforms() {
        let inst = ProblemInstance::iid(Distribution::uniform(0.0, 1.0), 3).unwrap();
        let r = verify_reduction(&inst, &EngineConfig::default()).unwrap();
        let x1 = (1.0 + 6f64.sqrt()) / 5.0;
        for p in &r.v_sequence.p_high {
            assert!((p - (1.0 - x1)).abs() < 1e-5);
        }
        assert!((r.value_original - 0.68428).abs() < 1e-4);
        assert!((r.value_reduced - x1 * x1).abs() < 1e-5);
        assert!(r.inequality_holds);
    }

    #[test]
    fn reduction_for_two_uniforms() {
        let inst = ProblemInstance::iid(Distribution::uniform(0.0, 1.0), 2).unwrap();
        let r = verify_reduction(&inst, &EngineConfig::default()).unwrap();
        assert!(r.c.is_empty());
        assert!((r.x1_star - 0.5).abs() < 1e-6);
        assert!((r.value_reduced - 0.5).abs() < 1e-6);
        assert!(r.inequality_holds);
    }

    #[test]
    fn reduction_is_tight_on_extremal_family() {
        for n in [3, 5] {
            let r = verify_reduction(&make_extremal_instance(n).unwrap(), &EngineConfig::default()).unwrap();
            for p in &r.v_sequence.p_high {
                assert_eq!(*p, 1.0 / n as f64);
            }
            assert!(r.gap().abs() < 1e-4, "n = {n}: gap {}", r.gap());
        }
        assert!(build_v_sequence(&make_extremal_instance(1).unwrap(), &EngineConfig::default()).is_err());
    }
}
