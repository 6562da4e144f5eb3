//! Stopping on the last success of independent Bernoulli trials.
//!
//! With success probabilities `p_1..p_m`, odds `r_j = p_j / (1 - p_j)` and
//! `q_j = 1 - p_j`, the optimal rule stops on the first success at or after
//! `s`, the largest index whose tail sum of odds reaches one (or `s = 1` if no
//! tail reaches one). The win probability is `prod_{j>=s} q_j * sum_{j>=s} r_j`.
//!
//! Sure successes (`p_j = 1`) are rejected: they make `r_j` infinite. A caller
//! holding one should drop every trial up to and including the last sure
//! success, since the rule can never do better than waiting for it.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Probability, FLOAT_TOLERANCE};

/// Largest horizon accepted by the exact-rational solver.
pub const EXACT_ODDS_LIMIT: usize = 64;

/// Validated success probabilities, each in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsVector {
    p: Vec<f64>,
}

impl OddsVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_probabilities(&p, |x| x.is_finite() && (0.0..1.0).contains(x))?;
        Ok(Self { p })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn odds(&self) -> Vec<f64> {
        self.p.iter().map(|p| p / (1.0 - p)).collect()
    }

    pub fn sum_odds(&self) -> f64 {
        self.odds().iter().sum()
    }
}

fn check_probabilities<T: std::fmt::Debug>(p: &[T], ok: impl Fn(&T) -> bool) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Validation("odds vector must contain at least one probability".into()));
    }
    if let Some((j, bad)) = p.iter().enumerate().find(|(_, x)| !ok(x)) {
        return Err(Error::Validation(format!(
            "p[{}] = {bad:?} is outside [0, 1); sure successes must be dropped by the caller",
            j + 1
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsSolution {
    /// 1-based index from which the first success is accepted.
    pub s: usize,
    /// Optimal win probability.
    pub v: f64,
    pub sum_odds: f64,
    /// `R_k = r_m + r_{m-1} + ... + r_{m-k+1}`: odds accumulated from the end.
    pub reversed_cumulative: Vec<f64>,
    /// First `k` with `R_k >= 1`, if any; `s = m - t + 1` when present.
    pub crossing_index: Option<usize>,
    /// `R_t * prod_{k<=t} q_{m-k+1}`, the same value computed from the end.
    pub v_reversed: Option<f64>,
}

/// Index and value of the optimal rule, in any probability representation.
fn odds_core<T: Probability>(p: &[T]) -> (usize, T) {
    let m = p.len();
    let odds: Vec<T> = p.iter().map(|x| x.clone() / x.one_minus()).collect();

    // tail sums are nonincreasing in k, so scan from the end
    let mut s = 1;
    let mut tail = T::zero();
    for k in (1..=m).rev() {
        tail = tail + odds[k - 1].clone();
        if tail.reaches_one() {
            s = k;
            break;
        }
    }

    let prod_q = p[s - 1..].iter().fold(T::one(), |acc, x| acc * x.one_minus());
    let sum_r = odds[s - 1..].iter().fold(T::zero(), |acc, r| acc + r.clone());
    (s, prod_q * sum_r)
}

/// Optimal last-success value for probabilities in `[0, 1)`, any representation.
pub(crate) fn odds_value<T: Probability>(p: &[T]) -> T {
    odds_core(p).1
}

/// Solve the last-success problem for `odds`.
pub fn solve_odds(odds: &OddsVector) -> OddsSolution {
    let p = odds.p();
    let m = p.len();
    let (s, v) = odds_core(p);
    let r = odds.odds();

    let mut reversed_cumulative = Vec::with_capacity(m);
    let mut acc = 0.0;
    for k in 1..=m {
        acc += r[m - k];
        reversed_cumulative.push(acc);
    }
    let crossing_index = reversed_cumulative.iter().position(|x| x.reaches_one()).map(|i| i + 1);
    let v_reversed = crossing_index.map(|t| {
        let prod_q: f64 = (1..=t).map(|k| 1.0 - p[m - k]).product();
        reversed_cumulative[t - 1] * prod_q
    });

    OddsSolution {
        s,
        v,
        sum_odds: reversed_cumulative[m - 1],
        reversed_cumulative,
        crossing_index,
        v_reversed,
    }
}

/// Exact-rational solution: `(s, v)`.
pub fn solve_odds_exact(p: &[BigRational]) -> Result<(usize, BigRational)> {
    if p.len() > EXACT_ODDS_LIMIT {
        return Err(Error::Capacity {
            what: "exact odds horizon",
            needed: p.len(),
            limit: EXACT_ODDS_LIMIT,
        });
    }
    let zero = BigRational::from_integer(0.into());
    let one = BigRational::from_integer(1.into());
    check_probabilities(p, |x| *x >= zero && *x < one)?;
    Ok(odds_core(p))
}

/// `b_n = (1 - 1/n)^(n-1)`, with `b_1 = 1`.
pub fn bound_b(n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::Domain("b_n is defined for n >= 1".into())),
        1 => Ok(1.0),
        _ => {
            let nf = n as f64;
            Ok(((nf - 1.0) * (-1.0 / nf).ln_1p()).exp())
        }
    }
}

/// Exact `b_n` as a rational.
pub fn bound_b_exact(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::Domain("b_n is defined for n >= 1".into()));
    }
    let base = BigRational::new((n as i64 - 1).into(), (n as i64).into());
    Ok(num_traits::pow(base, n - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsBoundReport {
    pub m: usize,
    pub sum_odds: f64,
    pub v: f64,
    /// `b_{m+1}`.
    pub bound_b: f64,
    /// The bound applies only when the odds sum to at least one.
    pub applicable: bool,
    /// `v >= b_{m+1}` (up to 1e-12); `None` when not applicable.
    pub bound_holds: Option<bool>,
    /// `v > 1/e`; `None` when not applicable.
    pub exceeds_inv_e: Option<bool>,
}

/// Check the sharp finite-horizon lower bound on the last-success value.
pub fn verify_odds_bounds(odds: &OddsVector) -> OddsBoundReport {
    let sol = solve_odds(odds);
    let m = odds.len();
    let b = bound_b(m + 1).expect("m + 1 >= 1");
    let applicable = sol.sum_odds.reaches_one();
    OddsBoundReport {
        m,
        sum_odds: sol.sum_odds,
        v: sol.v,
        bound_b: b,
        applicable,
        bound_holds: applicable.then_some(sol.v >= b - FLOAT_TOLERANCE),
        exceeds_inv_e: applicable.then(|| sol.v > (-1.0f64).exp()),
    }
}

/// The classical no-information secretary problem via the odds rule.
///
/// The event "applicant `i` is best so far" has probability `1/i`,
/// independently across `i`. Applicant 1 is always best so far, which is a
/// sure success, so it is dropped and indices `2..n` are solved; the reported
/// `s` is in the original numbering.
pub fn classical_secretary_value(n: usize) -> Result<OddsSolution> {
    match n {
        0 => Err(Error::Domain("secretary problem needs n >= 1".into())),
        1 => Ok(OddsSolution {
            s: 1,
            v: 1.0,
            sum_odds: f64::INFINITY,
            reversed_cumulative: vec![f64::INFINITY],
            crossing_index: Some(1),
            v_reversed: Some(1.0),
        }),
        _ => {
            let odds = OddsVector::new((2..=n).map(|i| 1.0 / i as f64).collect())?;
            let mut sol = solve_odds(&odds);
            sol.s += 1;
            Ok(sol)
        }
    }
}
