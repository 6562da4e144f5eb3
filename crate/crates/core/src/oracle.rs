//! Exact optimal stopping for finite-support instances.
//!
//! The state after observation `k` is the running maximum, stored as its rank
//! in the sorted union of all atom values. Stopping on a candidate with value
//! `m` wins iff no later observation exceeds `m`, so ties win. Stopping on a
//! non-candidate can never win, which lets the recursion consider candidates
//! only.

use num_rational::BigRational;
use serde::Serialize;

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};
use crate::numeric::{exact_probabilities, Probability};
use crate::policy::ThresholdPolicy;

/// Budget for `n * (sum of support sizes)`.
pub const ORACLE_STATE_LIMIT: usize = 1_000_000;
/// Budget for full path enumeration.
pub const ENUMERATION_LIMIT: usize = 1_000_000;
/// Largest support size accepted by [`DiscreteInstance::to_exact`].
pub const EXACT_MAX_SUPPORT: usize = 4;
/// Largest horizon accepted by [`DiscreteInstance::to_exact`].
pub const EXACT_MAX_N: usize = 6;

/// Independent finite-support variables, atoms sorted by value.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInstance<P = f64> {
    vars: Vec<Vec<(f64, P)>>,
}

impl<P: Probability> DiscreteInstance<P> {
    /// Validate and normalise: atoms are sorted and equal values merged.
    pub fn new(vars: Vec<Vec<(f64, P)>>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Validation("discrete instance needs n >= 1".into()));
        }
        let mut out = Vec::with_capacity(vars.len());
        for (i, mut atoms) in vars.into_iter().enumerate() {
            if atoms.is_empty() {
                return Err(Error::Validation(format!("variable {i} has no atoms")));
            }
            let mut total = P::zero();
            for (v, p) in &atoms {
                if !v.is_finite() {
                    return Err(Error::Validation(format!("variable {i} has a non-finite atom")));
                }
                if !(*p > P::zero() && *p <= P::one()) {
                    return Err(Error::Validation(format!("variable {i}: atom probability {p:?} outside (0, 1]")));
                }
                total = total + p.clone();
            }
            if !total.near_one() {
                return Err(Error::Validation(format!("variable {i}: probabilities sum to {total:?}")));
            }
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, P)> = Vec::with_capacity(atoms.len());
            for (v, p) in atoms {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 = last.1.clone() + p,
                    _ => merged.push((v, p)),
                }
            }
            out.push(merged);
        }
        Ok(Self { vars: out })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn atoms(&self, i: usize) -> &[(f64, P)] {
        &self.vars[i]
    }

    pub fn max_support(&self) -> usize {
        self.vars.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn total_support(&self) -> usize {
        self.vars.iter().map(Vec::len).sum()
    }
}

impl DiscreteInstance<f64> {
    /// Accepts point-mass, two-point and discrete laws.
    pub fn from_problem(instance: &ProblemInstance) -> Result<Self> {
        let vars = instance
            .distributions()
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.atoms().ok_or_else(|| {
                    Error::Validation(format!("distribution {i} ({}) has no finite support", d.kind()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars)
    }

    /// Exact image with rational probabilities.
    ///
    /// Each probability is converted exactly except the last atom of every
    /// variable, which absorbs the residue so the sum is exactly one.
    pub fn to_exact(&self) -> Result<DiscreteInstance<BigRational>> {
        if self.len() > EXACT_MAX_N || self.max_support() > EXACT_MAX_SUPPORT {
            return Err(Error::Capacity {
                what: "exact oracle (n, max support)",
                needed: self.len().max(self.max_support()),
                limit: EXACT_MAX_N.min(EXACT_MAX_SUPPORT),
            });
        }
        let vars = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, atoms)| {
                let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
                let exact = exact_probabilities(&probs)
                    .ok_or_else(|| Error::Validation(format!("variable {i}: probabilities have no exact image")))?;
                Ok(atoms.iter().map(|a| a.0).zip(exact).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteInstance::new(vars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult<P = f64> {
    pub value: P,
    /// For each time `k` (0-based slot), the atom values of `X_k` at which
    /// stopping on a candidate is optimal. The running maximum then equals the
    /// atom, so each entry is a (current max, atom) pair with equal coordinates.
    pub stop_sets: Vec<Vec<f64>>,
}

/// Sorted atom levels plus, per variable, `P(X_j <= level)` and atom ranks.
struct Tables<P> {
    /// `stop[k][m]`: win probability of stopping at time `k+1` with max at level `m`.
    stop: Vec<Vec<P>>,
    /// `atoms[j]`: (level rank, probability).
    atoms: Vec<Vec<(usize, P)>>,
    levels: Vec<f64>,
}

fn tables<P: Probability>(d: &DiscreteInstance<P>) -> Result<Tables<P>> {
    let states = d.len().saturating_mul(d.total_support());
    if states > ORACLE_STATE_LIMIT {
        return Err(Error::Capacity {
            what: "oracle state space",
            needed: states,
            limit: ORACLE_STATE_LIMIT,
        });
    }
    let mut levels: Vec<f64> = d.vars.iter().flatten().map(|a| a.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let l = levels.len();
    let rank = |v: f64| levels.partition_point(|&x| x < v);

    let atoms: Vec<Vec<(usize, P)>> = d
        .vars
        .iter()
        .map(|v| v.iter().map(|(x, p)| (rank(*x), p.clone())).collect())
        .collect();

    let cdf: Vec<Vec<P>> = atoms
        .iter()
        .map(|a| {
            let mut row = vec![P::zero(); l];
            for (r, p) in a {
                row[*r] = row[*r].clone() + p.clone();
            }
            let mut acc = P::zero();
            for x in row.iter_mut() {
                acc = acc + x.clone();
                *x = acc.clone();
            }
            row
        })
        .collect();

    let n = d.len();
    let mut stop = vec![vec![P::one(); l]; n];
    for k in (0..n - 1).rev() {
        stop[k] = (0..l).map(|m| stop[k + 1][m].clone() * cdf[k + 1][m].clone()).collect();
    }
    Ok(Tables { stop, atoms, levels })
}

/// Continuation values for a decision rule `stop_here(k, m, stop, cont)`.
///
/// Returns `cont[k][m]`: the win probability of continuing after time `k+1`
/// with running maximum at level `m`, following the rule afterwards.
fn continuation<P: Probability>(
    t: &Tables<P>,
    stop_here: &dyn Fn(usize, usize, &P, &P) -> bool,
) -> Vec<Vec<P>> {
    let n = t.stop.len();
    let l = t.levels.len();
    let mut cont = vec![vec![P::zero(); l]; n];
    for k in (0..n - 1).rev() {
        let next = k + 1;
        let row: Vec<P> = (0..l)
            .map(|m| {
                t.atoms[next].iter().fold(P::zero(), |acc, (x, p)| {
                    let v = if *x >= m {
                        let (s, c) = (&t.stop[next][*x], &cont[next][*x]);
                        if stop_here(next, *x, s, c) {
                            s.clone()
                        } else {
                            c.clone()
                        }
                    } else {
                        cont[next][m].clone()
                    };
                    acc + p.clone() * v
                })
            })
            .collect();
        cont[k] = row;
    }
    cont
}

fn first_value<P: Probability>(t: &Tables<P>, cont: &[Vec<P>], stop_here: &dyn Fn(usize, usize, &P, &P) -> bool) -> P {
    t.atoms[0].iter().fold(P::zero(), |acc, (x, p)| {
        let (s, c) = (&t.stop[0][*x], &cont[0][*x]);
        let v = if stop_here(0, *x, s, c) { s.clone() } else { c.clone() };
        acc + p.clone() * v
    })
}

/// Optimal win probability by backward dynamic programming.
pub fn oracle_optimal_value<P: Probability>(d: &DiscreteInstance<P>) -> Result<OracleResult<P>> {
    let t = tables(d)?;
    let optimal = |_: usize, _: usize, s: &P, c: &P| s >= c;
    let cont = continuation(&t, &optimal);
    let value = first_value(&t, &cont, &optimal);
    let stop_sets = (0..d.len())
        .map(|k| {
            t.atoms[k]
                .iter()
                .filter(|(x, _)| t.stop[k][*x] >= cont[k][*x])
                .map(|(x, _)| t.levels[*x])
                .collect()
        })
        .collect();
    Ok(OracleResult { value, stop_sets })
}

/// Exact win probability of a fixed threshold rule: at time `k < n` stop on a
/// candidate `x` iff `x >= x_k*`; otherwise stop at `n`.
pub fn oracle_policy_value<P: Probability>(d: &DiscreteInstance<P>, policy: &ThresholdPolicy) -> Result<P> {
    if policy.horizon() != d.len() {
        return Err(Error::Domain(format!(
            "policy is for n = {} but the instance has n = {}",
            policy.horizon(),
            d.len()
        )));
    }
    let t = tables(d)?;
    let n = d.len();
    let rule = |k: usize, m: usize, _: &P, _: &P| k + 1 == n || t.levels[m] >= policy.thresholds[k];
    let cont = continuation(&t, &rule);
    Ok(first_value(&t, &cont, &rule))
}

/// Probabilities of the "best so far" events `A_i = {X_i >= max(X_1..X_{i-1})}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvents<P = f64> {
    /// `P(A_i)`, 0-based.
    pub marginal: Vec<P>,
    /// `P(A_i ∩ A_j)`, 0-based.
    pub joint: Vec<Vec<P>>,
}

impl<P: Probability> CandidateEvents<P> {
    /// `P(A_i ∩ A_j) == P(A_i) P(A_j)`, exactly for rationals.
    pub fn independent(&self, i: usize, j: usize) -> bool {
        let product = self.marginal[i].clone() * self.marginal[j].clone();
        self.joint[i][j].approx_eq(&product)
    }
}

/// Enumerate every path and tabulate the candidate events.
pub fn candidate_events<P: Probability>(d: &DiscreteInstance<P>) -> Result<CandidateEvents<P>> {
    let paths = d.vars.iter().try_fold(1usize, |acc, v| acc.checked_mul(v.len()));
    match paths {
        Some(p) if p <= ENUMERATION_LIMIT => {}
        _ => {
            return Err(Error::Capacity {
                what: "path enumeration",
                needed: paths.unwrap_or(usize::MAX),
                limit: ENUMERATION_LIMIT,
            })
        }
    }
    let n = d.len();
    let mut marginal = vec![P::zero(); n];
    let mut joint = vec![vec![P::zero(); n]; n];
    let mut idx = vec![0usize; n];
    loop {
        let mut prob = P::one();
        let mut best = f64::NEG_INFINITY;
        let mut hits = Vec::with_capacity(n);
        for (i, &a) in idx.iter().enumerate() {
            let (x, p) = &d.vars[i][a];
            prob = prob * p.clone();
            hits.push(*x >= best);
            best = best.max(*x);
        }
        for i in 0..n {
            if hits[i] {
                marginal[i] = marginal[i].clone() + prob.clone();
                for j in 0..n {
                    if hits[j] {
                        joint[i][j] = joint[i][j].clone() + prob.clone();
                    }
                }
            }
        }
        // odometer increment
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(CandidateEvents { marginal, joint });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < d.vars[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::ratio(n, d)
    }

    fn exact(vars: Vec<Vec<(f64, (i64, i64))>>) -> DiscreteInstance<BigRational> {
        DiscreteInstance::new(
            vars.into_iter()
                .map(|v| v.into_iter().map(|(x, (a, b))| (x, rat(a, b))).collect())
                .collect(),
        )
        .unwrap()
    }

    /// Unpruned optimum over the full prefix history, stopping allowed anywhere.
    fn history_value(d: &DiscreteInstance<BigRational>, prefix: &mut Vec<f64>) -> BigRational {
        let k = prefix.len();
        let win_if_stop = |prefix: &[f64]| -> BigRational {
            let x = *prefix.last().unwrap();
            if prefix.iter().any(|&y| y > x) {
                return BigRational::zero();
            }
            (prefix.len()..d.len())
                .map(|j| d.atoms(j).iter().filter(|a| a.0 <= x).fold(BigRational::zero(), |s, a| s + a.1.clone()))
                .fold(BigRational::one(), |acc, p| acc * p)
        };
        d.atoms(k).iter().fold(BigRational::zero(), |acc, (x, p)| {
            prefix.push(*x);
            let stop = win_if_stop(prefix);
            let v = if k + 1 == d.len() {
                stop
            } else {
                let cont = history_value(d, prefix);
                if stop > cont { stop } else { cont }
            };
            prefix.pop();
            acc + p.clone() * v
        })
    }

    fn random_exact<R: Rng>(rng: &mut R, n: usize, support: usize) -> DiscreteInstance<BigRational> {
        let vars = (0..n)
            .map(|_| {
                let s = rng.random_range(1..=support);
                let weights: Vec<i64> = (0..s).map(|_| rng.random_range(1..=5)).collect();
                let total: i64 = weights.iter().sum();
                weights
                    .into_iter()
                    .map(|w| (rng.random_range(0..5) as f64, rat(w, total)))
                    .collect()
            })
            .collect();
        DiscreteInstance::new(vars).unwrap()
    }

    #[test]
    fn v_sequence_attains_four_ninths() {
        let d = exact(vec![
            vec![(0.0, (1, 1))],
            vec![(-1.0, (2, 3)), (1.0, (1, 3))],
            vec![(-2.0, (2, 3)), (2.0, (1, 3))],
        ]);
        assert_eq!(oracle_optimal_value(&d).unwrap().value, rat(4, 9));
        let skip_first = ThresholdPolicy::new(vec![f64::INFINITY, f64::NEG_INFINITY]);
        assert_eq!(oracle_policy_value(&d, &skip_first).unwrap(), rat(4, 9));
    }

    #[test]
    fn tie_semantics() {
        let d = exact(vec![vec![(1.0, (1, 1))], vec![(0.0, (1, 2)), (2.0, (1, 2))]]);
        assert_eq!(oracle_optimal_value(&d).unwrap().value, rat(1, 2));
        let d = exact(vec![vec![(1.0, (1, 1))], vec![(1.0, (1, 2)), (2.0, (1, 2))]]);
        let r = oracle_optimal_value(&d).unwrap();
        assert_eq!(r.value, BigRational::one());
        assert_eq!(r.stop_sets[1], vec![1.0, 2.0]);
    }

    #[test]
    fn point_masses_trace_directly() {
        let d = DiscreteInstance::new(vec![vec![(3.0, 1.0)], vec![(1.0, 1.0)], vec![(2.0, 1.0)]]).unwrap();
        assert_eq!(oracle_policy_value(&d, &ThresholdPolicy::new(vec![0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(oracle_policy_value(&d, &ThresholdPolicy::new(vec![5.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn candidate_events_are_dependent() {
        let d = exact(vec![
            vec![(1.0, (1, 1))],
            vec![(0.0, (1, 2)), (3.0, (1, 2))],
            vec![(0.0, (1, 3)), (2.0, (1, 3)), (4.0, (1, 3))],
        ]);
        let ev = candidate_events(&d).unwrap();
        assert_eq!(ev.marginal[1], rat(1, 2));
        assert_eq!(ev.marginal[2], rat(1, 2));
        assert_eq!(ev.joint[1][2], rat(1, 6));
        assert!(!ev.independent(1, 2));
    }

    #[test]
    fn pruned_matches_unpruned_and_dominates_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let d = random_exact(&mut rng, n, 3);
            let best = oracle_optimal_value(&d).unwrap().value;
            assert_eq!(best, history_value(&d, &mut Vec::new()), "{d:?}");
            let rule = ThresholdPolicy::new((1..n).map(|_| rng.random_range(-1..6) as f64).collect());
            assert!(oracle_policy_value(&d, &rule).unwrap() <= best);
        }
    }

    #[test]
    fn float_and_exact_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = random_exact(&mut rng, 4, 3);
            let f = DiscreteInstance::new(
                (0..d.len())
                    .map(|i| d.atoms(i).iter().map(|(x, p)| (*x, p.to_f64())).collect())
                    .collect(),
            )
            .unwrap();
            let a = oracle_optimal_value(&d).unwrap().value.to_f64();
            let b = oracle_optimal_value(&f).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn capacity_and_validation_errors() {
        assert!(DiscreteInstance::<f64>::new(vec![]).is_err());
        assert!(DiscreteInstance::new(vec![vec![(0.0, 0.5)]]).is_err());
        assert!(DiscreteInstance::new(vec![vec![(f64::NAN, 1.0)]]).is_err());
        let wide = DiscreteInstance::new(vec![(0..5).map(|i| (i as f64, 0.2)).collect::<Vec<_>>()]).unwrap();
        assert!(matches!(wide.to_exact(), Err(Error::Capacity { .. })));
        let big = DiscreteInstance::new(vec![(0..1001).map(|i| (i as f64, 1.0 / 1001.0)).collect::<Vec<_>>(); 1000]);
        assert!(matches!(oracle_optimal_value(&big.unwrap()), Err(Error::Capacity { .. })));
    }
}
