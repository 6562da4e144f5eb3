//! Value curves, critical thresholds and the optimal win probability for
//! instances whose laws are all continuous.
//!
//! For a candidate with value `x` at time `k`, stopping wins with probability
//! `U_k(x) = prod_{j>k} F_j(x)`. Continuing with running maximum `m` wins with
//! probability `W_k(m)`, which satisfies `W_{n-1}(m) = 1 - F_n(m)` and
//!
//! ```text
//! W_k(m) = F_{k+1}(m) W_{k+1}(m) + ∫_m^∞ max{U_{k+1}(x), W_{k+1}(x)} dF_{k+1}(x).
//! ```
//!
//! All curves are tabulated on one shared grid: the union of every law's
//! quantile nodes and CDF breakpoints. Because the grid contains a uniform
//! quantile grid of each `F_j`, the integral against `dF_{k+1}` is a composite
//! trapezoid in quantile space, evaluated for every grid node at once with a
//! cumulative sum from the right.

use serde::{Deserialize, Serialize};

use crate::distributions::ProblemInstance;
use crate::error::{Error, Result};

/// Difference `U - W` above which a node counts as "stop", i.e. ties stop.
/// Keeps the infimum of the stop set stable on intervals where `U = W`.
const TIE_SLACK: f64 = 1e-12;

/// Width tolerance used to report intervals on which `U` and `W` coincide.
const AMBIGUITY_SLACK: f64 = 1e-9;

/// Allowed violation of threshold monotonicity before it is flagged.
pub const MONOTONICITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Quantile nodes per distribution.
    pub grid_points: usize,
    /// Lowest and highest quantile level used for the per-law grids.
    pub tail_epsilon: f64,
    /// Bisection stopping width for thresholds.
    pub threshold_tolerance: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            grid_points: 2048,
            tail_epsilon: 1e-9,
            threshold_tolerance: 1e-10,
        }
    }
}

impl EngineConfig {
    pub fn with_grid(grid_points: usize) -> Self {
        Self {
            grid_points,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(Error::Validation(format!("grid_points must be >= 16 (got {})", self.grid_points)));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1e-3) {
            return Err(Error::Validation(format!(
                "tail_epsilon must lie in (0, 1e-3) (got {})",
                self.tail_epsilon
            )));
        }
        if self.threshold_tolerance.is_nan() || self.threshold_tolerance <= 0.0 {
            return Err(Error::Validation("threshold_tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Tabulated `U_k` and `W_k` for `k = 1..n-1` on a shared grid.
#[derive(Debug, Clone)]
pub struct ValueCurves {
    instance: ProblemInstance,
    grid: Vec<f64>,
    stop: Vec<Vec<f64>>,
    cont: Vec<Vec<f64>>,
}

impl ValueCurves {
    pub fn n(&self) -> usize {
        self.instance.len()
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Tabulated `U_k` (1-based `k`).
    pub fn stop_values(&self, k: usize) -> &[f64] {
        &self.stop[k - 1]
    }

    /// Tabulated `W_k` (1-based `k`).
    pub fn continue_values(&self, k: usize) -> &[f64] {
        &self.cont[k - 1]
    }

    /// `U_k(x) = prod_{j>k} F_j(x)`, evaluated exactly. `U_n` is the empty product.
    pub fn stop_value(&self, k: usize, x: f64) -> f64 {
        stop_probability(&self.instance, k, x)
    }

    /// `W_k(x)` by linear interpolation of the tabulation; constant outside the grid.
    pub fn continue_value(&self, k: usize, x: f64) -> f64 {
        interpolate(&self.grid, &self.cont[k - 1], x)
    }

    /// `U_k(x)` by linear interpolation of the tabulation.
    pub fn stop_value_interpolated(&self, k: usize, x: f64) -> f64 {
        interpolate(&self.grid, &self.stop[k - 1], x)
    }

    /// `max{U_k, W_k}` at grid node `i`.
    fn best_at_node(&self, k: usize, i: usize) -> f64 {
        self.stop[k - 1][i].max(self.cont[k - 1][i])
    }
}

/// `prod_{j>k} F_j(x)` for 1-based `k`.
pub(crate) fn stop_probability(instance: &ProblemInstance, k: usize, x: f64) -> f64 {
    instance.distributions()[k..].iter().map(|d| d.cdf(x)).product()
}

/// Piecewise-linear interpolation of `(xs, ys)`, flat outside `[xs[0], xs[last]]`.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&g| g <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = (x - x0) / (x1 - x0);
    ys[j - 1] + t * (ys[j] - ys[j - 1])
}

/// Shared grid: every law's quantiles at `eps..1-eps` plus its breakpoints.
pub(crate) fn build_grid(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<Vec<f64>> {
    let g = cfg.grid_points;
    let eps = cfg.tail_epsilon;
    let mut grid = Vec::with_capacity(instance.len() * (g + 4));
    for d in instance.distributions() {
        grid.extend((0..g).map(|i| d.quantile(eps + (1.0 - 2.0 * eps) * i as f64 / (g - 1) as f64)));
        grid.extend(d.breakpoints());
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 || grid[grid.len() - 1] <= grid[0] {
        return Err(Error::DegenerateSupport);
    }
    Ok(grid)
}

/// Backward induction for `U_k`, `W_k`, `k = n-1, ..., 1`.
pub fn compute_value_curves(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<ValueCurves> {
    cfg.validate()?;
    instance.require_continuous()?;
    let n = instance.len();
    let grid = build_grid(instance, cfg)?;
    let len = grid.len();

    let cdfs: Vec<Vec<f64>> = instance
        .distributions()
        .iter()
        .map(|d| grid.iter().map(|&x| d.cdf(x)).collect())
        .collect();

    let mut stop = vec![Vec::new(); n.saturating_sub(1)];
    let mut cont = vec![Vec::new(); n.saturating_sub(1)];
    if n < 2 {
        return Ok(ValueCurves {
            instance: instance.clone(),
            grid,
            stop,
            cont,
        });
    }

    // k = n - 1 (0-based slot n - 2)
    stop[n - 2] = cdfs[n - 1].clone();
    cont[n - 2] = cdfs[n - 1].iter().map(|f| 1.0 - f).collect();

    for k in (1..n - 1).rev() {
        // F_{k+1} is cdfs[k]; U_{k+1}, W_{k+1} live in slot k
        let f = &cdfs[k];
        let u_next = &stop[k];
        let w_next = &cont[k];
        let best: Vec<f64> = u_next.iter().zip(w_next).map(|(u, w)| u.max(*w)).collect();

        let mut tail = vec![0.0; len];
        for i in (0..len - 1).rev() {
            tail[i] = tail[i + 1] + (f[i + 1] - f[i]) * 0.5 * (best[i] + best[i + 1]);
        }

        let mut w: Vec<f64> = (0..len).map(|i| f[i] * w_next[i] + tail[i]).collect();
        monotone_nonincreasing(&mut w);
        let mut u: Vec<f64> = f.iter().zip(u_next).map(|(a, b)| a * b).collect();
        monotone_nondecreasing(&mut u);

        stop[k - 1] = u;
        cont[k - 1] = w;
    }

    Ok(ValueCurves {
        instance: instance.clone(),
        grid,
        stop,
        cont,
    })
}

fn monotone_nonincreasing(v: &mut [f64]) {
    let mut running = 1.0f64;
    for x in v.iter_mut() {
        running = running.min(x.clamp(0.0, 1.0));
        *x = running;
    }
}

fn monotone_nondecreasing(v: &mut [f64]) {
    let mut running = 0.0f64;
    for x in v.iter_mut() {
        running = running.max(x.clamp(0.0, 1.0));
        *x = running;
    }
}

/// Critical values `x_1* >= ... >= x_{n-1}*`: at time `k` a candidate is
/// accepted iff its value is at least `x_k*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub thresholds: Vec<f64>,
    /// 1-based `k` for which `U_k < W_k` on the whole grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub saturated: Vec<usize>,
    /// Length of the interval above `x_k*` on which `U_k` and `W_k` coincide.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ambiguity_widths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

impl ThresholdPolicy {
    /// A fixed rule from explicit thresholds (no diagnostics).
    pub fn new(thresholds: Vec<f64>) -> Self {
        Self {
            thresholds,
            saturated: Vec::new(),
            ambiguity_widths: Vec::new(),
            anomalies: Vec::new(),
        }
    }

    /// Horizon `n` this rule applies to.
    pub fn horizon(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn is_monotone(&self, slack: f64) -> bool {
        self.thresholds.windows(2).all(|w| w[0] >= w[1] - slack)
    }

    pub fn has_anomaly(&self) -> bool {
        !self.anomalies.is_empty()
    }
}

/// Locate each `x_k* = inf{x : U_k(x) >= W_k(x)}`, refined by bisection.
pub fn compute_thresholds(curves: &ValueCurves, cfg: &EngineConfig) -> Result<ThresholdPolicy> {
    cfg.validate()?;
    let grid = curves.grid();
    let n = curves.n();
    let mut policy = ThresholdPolicy::new(Vec::with_capacity(n.saturating_sub(1)));

    for k in 1..n {
        let u = curves.stop_values(k);
        let w = curves.continue_values(k);
        let diff = |i: usize| u[i] - w[i];

        let Some(first) = (0..grid.len()).find(|&i| diff(i) >= -TIE_SLACK) else {
            policy.saturated.push(k);
            policy
                .anomalies
                .push(format!("threshold {k} saturated: U_{k} < W_{k} on the whole grid"));
            policy.thresholds.push(grid[grid.len() - 1]);
            policy.ambiguity_widths.push(0.0);
            continue;
        };

        let x_star = if first == 0 {
            grid[0]
        } else {
            let d = |x: f64| curves.stop_value_interpolated(k, x) - curves.continue_value(k, x);
            bisect_first_nonnegative(d, grid[first - 1], grid[first], cfg.threshold_tolerance)
        };

        let mut last = first;
        while last + 1 < grid.len() && diff(last + 1).abs() <= AMBIGUITY_SLACK {
            last += 1;
        }
        let width = if diff(first).abs() <= AMBIGUITY_SLACK {
            (grid[last] - x_star).max(0.0)
        } else {
            0.0
        };

        policy.thresholds.push(x_star);
        policy.ambiguity_widths.push(width);
    }

    for (k, w) in policy.thresholds.windows(2).enumerate() {
        if w[0] < w[1] - MONOTONICITY_SLACK {
            policy.anomalies.push(format!(
                "thresholds not monotone: x_{}* = {} < x_{}* = {}",
                k + 1,
                w[0],
                k + 2,
                w[1]
            ));
        }
    }
    Ok(policy)
}

/// Smallest `x` in `[lo, hi]` with `f(x) >= -TIE_SLACK`, given `f(lo) < 0 <= f(hi)` in that sense.
fn bisect_first_nonnegative(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= -TIE_SLACK {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Curves, thresholds and optimal value computed in one pass.
#[derive(Debug, Clone)]
pub struct PolicySolution {
    pub curves: ValueCurves,
    pub policy: ThresholdPolicy,
    pub value: f64,
}

/// `V_n = ∫ max{U_1, W_1} dF_1`, with the threshold inserted as a quadrature node.
fn value_from_curves(curves: &ValueCurves, policy: &ThresholdPolicy) -> f64 {
    let grid = curves.grid();
    let first = curves.instance().get(0);
    let x_star = policy.thresholds[0];

    let mut nodes: Vec<(f64, f64)> = (0..grid.len())
        .map(|i| (first.cdf(grid[i]), curves.best_at_node(1, i)))
        .collect();
    let at = grid.partition_point(|&g| g < x_star);
    if at > 0 && at < grid.len() && grid[at] != x_star {
        let h = curves
            .stop_value_interpolated(1, x_star)
            .max(curves.continue_value(1, x_star));
        nodes.insert(at, (first.cdf(x_star), h));
    }
    nodes.windows(2).map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1)).sum::<f64>().clamp(0.0, 1.0)
}

pub fn solve_instance(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<PolicySolution> {
    let curves = compute_value_curves(instance, cfg)?;
    let policy = compute_thresholds(&curves, cfg)?;
    let value = if instance.len() == 1 {
        1.0
    } else {
        value_from_curves(&curves, &policy)
    };
    Ok(PolicySolution { curves, policy, value })
}

/// Optimal win probability `V_n` of a continuous instance.
pub fn optimal_value(instance: &ProblemInstance, cfg: &EngineConfig) -> Result<f64> {
    if instance.len() == 1 {
        instance.require_continuous()?;
        return Ok(1.0);
    }
    Ok(solve_instance(instance, cfg)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    /// 1-based stopping time.
    pub stop_index: usize,
    pub value: f64,
    /// Stopped value is at least every observation (ties win).
    pub won: bool,
}

/// Play the threshold rule on one realized path.
pub fn run_policy(policy: &ThresholdPolicy, path: &[f64]) -> Result<PolicyOutcome> {
    if path.len() != policy.horizon() {
        return Err(Error::Domain(format!(
            "path has {} observations but the policy is for n = {}",
            path.len(),
            policy.horizon()
        )));
    }
    Ok(play(&policy.thresholds, path))
}

/// `run_policy` without the length check.
pub(crate) fn play(thresholds: &[f64], path: &[f64]) -> PolicyOutcome {
    let mut running_max = f64::NEG_INFINITY;
    let mut stop_index = path.len();
    for (k, (&x, &t)) in path.iter().zip(thresholds).enumerate() {
        if x >= running_max && x >= t {
            stop_index = k + 1;
            break;
        }
        running_max = running_max.max(x);
    }
    let value = path[stop_index - 1];
    let overall = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    PolicyOutcome {
        stop_index,
        value,
        won: value >= overall,
    }
}
