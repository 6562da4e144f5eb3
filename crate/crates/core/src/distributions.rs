//! Observation laws and problem instances.
//!
//! Every law has bounded support and exposes an analytic CDF, its generalized
//! inverse and a sampler driven by a [`RandomStream`]. Laws with atoms are
//! representable (the oracle and the two-point reduction need them) but are
//! flagged, and the continuous value engine refuses them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::FLOAT_TOLERANCE;
use crate::rng::RandomStream;

/// A single observation law.
///
/// The serialized form is internally tagged by `kind`, e.g.
/// `{"kind":"uniform","low":0.0,"high":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform {
        low: f64,
        high: f64,
    },
    /// `high_value` with probability `p_high`, otherwise `low_value`.
    TwoPoint {
        low_value: f64,
        high_value: f64,
        p_high: f64,
    },
    /// CDF given by linear interpolation between `(x, F(x))` knots.
    PiecewiseLinearCdf {
        knots: Vec<[f64; 2]>,
    },
    /// Member `index` (1-based) of the `n`-variable extremal family.
    ///
    /// Index 1 is uniform on (0, 1). Index `i >= 2` has density `(n-1)/n` on
    /// `(-i, -i+1)` and `1/n` on `(i, i+1)`.
    ExtremalComponent {
        n: usize,
        index: usize,
    },
    PointMass {
        value: f64,
    },
    /// Finite support: `[value, probability]` pairs with increasing values.
    Discrete {
        atoms: Vec<[f64; 2]>,
    },
}

impl Distribution {
    pub fn uniform(low: f64, high: f64) -> Self {
        Distribution::Uniform { low, high }
    }

    pub fn two_point(low_value: f64, high_value: f64, p_high: f64) -> Self {
        Distribution::TwoPoint {
            low_value,
            high_value,
            p_high,
        }
    }

    pub fn piecewise(knots: &[(f64, f64)]) -> Self {
        Distribution::PiecewiseLinearCdf {
            knots: knots.iter().map(|&(x, f)| [x, f]).collect(),
        }
    }

    pub fn extremal(n: usize, index: usize) -> Self {
        Distribution::ExtremalComponent { n, index }
    }

    pub fn point_mass(value: f64) -> Self {
        Distribution::PointMass { value }
    }

    pub fn discrete(atoms: &[(f64, f64)]) -> Self {
        Distribution::Discrete {
            atoms: atoms.iter().map(|&(v, p)| [v, p]).collect(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Uniform { .. } => "uniform",
            Distribution::TwoPoint { .. } => "two_point",
            Distribution::PiecewiseLinearCdf { .. } => "piecewise_linear_cdf",
            Distribution::ExtremalComponent { .. } => "extremal_component",
            Distribution::PointMass { .. } => "point_mass",
            Distribution::Discrete { .. } => "discrete",
        }
    }

    /// Human-readable list of everything wrong with the parameters.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Distribution::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() {
                    out.push("uniform bounds must be finite".to_string());
                } else if low >= high {
                    out.push(format!("uniform requires low < high (got {low} >= {high})"));
                }
            }
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => {
                if !low_value.is_finite() || !high_value.is_finite() {
                    out.push("two_point values must be finite".to_string());
                } else if low_value >= high_value {
                    out.push(format!(
                        "two_point requires low_value < high_value (got {low_value} >= {high_value})"
                    ));
                }
                if !(0.0..=1.0).contains(p_high) {
                    out.push(format!("two_point p_high must lie in [0, 1] (got {p_high})"));
                }
            }
            Distribution::PiecewiseLinearCdf { knots } => {
                if knots.len() < 2 {
                    out.push("piecewise_linear_cdf needs at least two knots".to_string());
                    return out;
                }
                if knots.iter().any(|k| !k[0].is_finite() || !k[1].is_finite()) {
                    out.push("piecewise_linear_cdf knots must be finite".to_string());
                    return out;
                }
                for (j, w) in knots.windows(2).enumerate() {
                    if w[1][0] <= w[0][0] {
                        out.push(format!("knot x-values must be strictly increasing (knot {})", j + 1));
                    }
                    if w[1][1] < w[0][1] {
                        out.push(format!("CDF values must be nondecreasing (knot {})", j + 1));
                    }
                }
                let first = knots[0][1];
                let last = knots[knots.len() - 1][1];
                if first != 0.0 || last != 1.0 {
                    out.push(format!("CDF knots must span [0, 1] (got {first} .. {last})"));
                }
            }
            Distribution::ExtremalComponent { n, index } => {
                if *n == 0 {
                    out.push("extremal_component requires n >= 1".to_string());
                } else if *index == 0 || index > n {
                    out.push(format!("extremal_component index must lie in 1..={n} (got {index})"));
                }
            }
            Distribution::PointMass { value } => {
                if !value.is_finite() {
                    out.push("point_mass value must be finite".to_string());
                }
            }
            Distribution::Discrete { atoms } => {
                if atoms.is_empty() {
                    out.push("discrete needs at least one atom".to_string());
                    return out;
                }
                if atoms.iter().any(|a| !a[0].is_finite()) {
                    out.push("discrete atom values must be finite".to_string());
                }
                if atoms.iter().any(|a| !(a[1] > 0.0 && a[1] <= 1.0)) {
                    out.push("discrete atom probabilities must lie in (0, 1]".to_string());
                }
                if atoms.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    out.push("discrete atom values must be strictly increasing".to_string());
                }
                let total: f64 = atoms.iter().map(|a| a[1]).sum();
                if (total - 1.0).abs() > FLOAT_TOLERANCE {
                    out.push(format!("discrete probabilities must sum to 1 (got {total})"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!("{}: {}", self.kind(), v.join("; "))))
        }
    }

    /// True if the law puts positive mass on some single point.
    pub fn has_atom(&self) -> bool {
        matches!(
            self,
            Distribution::TwoPoint { .. } | Distribution::PointMass { .. } | Distribution::Discrete { .. }
        )
    }

    /// Finite `[lo, hi]` with `F(lo-) = 0` and `F(hi) = 1`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::Uniform { low, high } => (*low, *high),
            Distribution::TwoPoint {
                low_value,
                high_value,
                ..
            } => (*low_value, *high_value),
            Distribution::PiecewiseLinearCdf { knots } => (knots[0][0], knots[knots.len() - 1][0]),
            Distribution::ExtremalComponent { index, .. } => {
                if *index == 1 {
                    (0.0, 1.0)
                } else {
                    let i = *index as f64;
                    (-i, i + 1.0)
                }
            }
            Distribution::PointMass { value } => (*value, *value),
            Distribution::Discrete { atoms } => (atoms[0][0], atoms[atoms.len() - 1][0]),
        }
    }

    /// Points where the CDF is not smooth, support endpoints included.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Distribution::Uniform { low, high } => vec![*low, *high],
            Distribution::TwoPoint {
                low_value,
                high_value,
                ..
            } => vec![*low_value, *high_value],
            Distribution::PiecewiseLinearCdf { knots } => knots.iter().map(|k| k[0]).collect(),
            Distribution::ExtremalComponent { index, .. } => {
                if *index == 1 {
                    vec![0.0, 1.0]
                } else {
                    let i = *index as f64;
                    vec![-i, -i + 1.0, i, i + 1.0]
                }
            }
            Distribution::PointMass { value } => vec![*value],
            Distribution::Discrete { atoms } => atoms.iter().map(|a| a[0]).collect(),
        }
    }

    /// `(value, probability)` pairs for finite-support laws, `None` otherwise.
    ///
    /// Zero-probability atoms (a two-point law with `p_high` of 0 or 1) are dropped.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => Some(
                [(*low_value, 1.0 - p_high), (*high_value, *p_high)]
                    .into_iter()
                    .filter(|a| a.1 > 0.0)
                    .collect(),
            ),
            Distribution::PointMass { value } => Some(vec![(*value, 1.0)]),
            Distribution::Discrete { atoms } => Some(atoms.iter().map(|a| (a[0], a[1])).collect()),
            _ => None,
        }
    }

    /// `F(x) = P(X <= x)`. Assumes the parameters are valid.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => {
                if x < *low_value {
                    0.0
                } else if x < *high_value {
                    1.0 - p_high
                } else {
                    1.0
                }
            }
            Distribution::PiecewiseLinearCdf { knots } => piecewise_cdf(knots, x),
            Distribution::ExtremalComponent { n, index } => extremal_cdf(*n, *index, x),
            Distribution::PointMass { value } => {
                if x < *value {
                    0.0
                } else {
                    1.0
                }
            }
            Distribution::Discrete { atoms } => atoms.iter().take_while(|a| a[0] <= x).map(|a| a[1]).sum::<f64>().min(1.0),
        }
    }

    /// `P(X > x)`, computed directly where `1 - F(x)` would round.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform { low, high } => ((high - x) / (high - low)).clamp(0.0, 1.0),
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => {
                if x < *low_value {
                    1.0
                } else if x < *high_value {
                    *p_high
                } else {
                    0.0
                }
            }
            Distribution::ExtremalComponent { n, index } if *index >= 2 => {
                let i = *index as f64;
                let nf = *n as f64;
                if x < -i + 1.0 {
                    1.0 - extremal_cdf(*n, *index, x)
                } else if x <= i {
                    1.0 / nf
                } else if x < i + 1.0 {
                    (i + 1.0 - x) / nf
                } else {
                    0.0
                }
            }
            Distribution::Discrete { atoms } => atoms.iter().filter(|a| a[0] > x).map(|a| a[1]).sum(),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Generalized inverse `inf{x : F(x) >= u}`; `u = 0` maps to the lower
    /// support bound. Assumes valid parameters and `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Distribution::Uniform { low, high } => low + u * (high - low),
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => {
                if u <= 1.0 - p_high {
                    *low_value
                } else {
                    *high_value
                }
            }
            Distribution::PiecewiseLinearCdf { knots } => piecewise_quantile(knots, u),
            Distribution::ExtremalComponent { n, index } => extremal_quantile(*n, *index, u),
            Distribution::PointMass { value } => *value,
            Distribution::Discrete { atoms } => {
                let mut acc = 0.0;
                for a in atoms {
                    acc += a[1];
                    if acc >= u {
                        return a[0];
                    }
                }
                atoms[atoms.len() - 1][0]
            }
        }
    }

    /// One draw by inversion of the next uniform in `stream`.
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        if let Distribution::PointMass { value } = self {
            return *value;
        }
        // open interval keeps inversion away from the support endpoints
        let mut u = stream.next_uniform();
        while u == 0.0 {
            u = stream.next_uniform();
        }
        self.quantile(u)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform { low, high } => write!(f, "uniform({low}, {high})"),
            Distribution::TwoPoint {
                low_value,
                high_value,
                p_high,
            } => write!(f, "two_point({low_value}, {high_value}; p_high={p_high})"),
            Distribution::PiecewiseLinearCdf { knots } => write!(f, "piecewise_linear_cdf({} knots)", knots.len()),
            Distribution::ExtremalComponent { n, index } => write!(f, "extremal_component(n={n}, index={index})"),
            Distribution::PointMass { value } => write!(f, "point_mass({value})"),
            Distribution::Discrete { atoms } => write!(f, "discrete({} atoms)", atoms.len()),
        }
    }
}

fn piecewise_cdf(knots: &[[f64; 2]], x: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if x < first[0] {
        return 0.0;
    }
    if x >= last[0] {
        return 1.0;
    }
    // first knot with knot.x > x; x lies in [knots[j-1].x, knots[j].x)
    let j = knots.partition_point(|k| k[0] <= x);
    let (a, b) = (knots[j - 1], knots[j]);
    a[1] + (x - a[0]) / (b[0] - a[0]) * (b[1] - a[1])
}

fn piecewise_quantile(knots: &[[f64; 2]], u: f64) -> f64 {
    let j = knots.partition_point(|k| k[1] < u);
    if j == 0 {
        return knots[0][0];
    }
    if j == knots.len() {
        return knots[knots.len() - 1][0];
    }
    let (a, b) = (knots[j - 1], knots[j]);
    a[0] + (u - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
}

fn extremal_cdf(n: usize, index: usize, x: f64) -> f64 {
    if index == 1 {
        return x.clamp(0.0, 1.0);
    }
    let i = index as f64;
    let low_mass = (n as f64 - 1.0) / n as f64;
    if x <= -i {
        0.0
    } else if x < -i + 1.0 {
        (x + i) * low_mass
    } else if x <= i {
        low_mass
    } else if x < i + 1.0 {
        low_mass + (x - i) / n as f64
    } else {
        1.0
    }
}

fn extremal_quantile(n: usize, index: usize, u: f64) -> f64 {
    if index == 1 {
        return u;
    }
    let i = index as f64;
    let low_mass = (n as f64 - 1.0) / n as f64;
    if u <= low_mass {
        -i + u / low_mass
    } else {
        i + (u - low_mass) * n as f64
    }
}

/// Checked CDF evaluation.
pub fn evaluate_cdf(d: &Distribution, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cdf argument must be finite (got {x})")));
    }
    d.validate()?;
    Ok(d.cdf(x))
}

/// Checked quantile evaluation.
pub fn evaluate_quantile(d: &Distribution, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("quantile level must lie in [0, 1] (got {u})")));
    }
    d.validate()?;
    Ok(d.quantile(u))
}

/// A problem-level or per-distribution validation failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 0-based position of the offending distribution, if any.
    pub index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub violations: Vec<Violation>,
    pub all_continuous: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| match v.index {
                Some(i) => format!("distribution {i}: {}", v.message),
                None => v.message.clone(),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Check every distribution of a candidate instance. Never fails; problems
/// are collected in the report.
pub fn validate_instance(distributions: &[Distribution]) -> ValidationReport {
    let mut violations = Vec::new();
    if distributions.is_empty() {
        violations.push(Violation {
            index: None,
            message: "n must be ≥ 1".to_string(),
        });
    }
    for (i, d) in distributions.iter().enumerate() {
        violations.extend(d.violations().into_iter().map(|message| Violation { index: Some(i), message }));
    }
    ValidationReport {
        n: distributions.len(),
        violations,
        all_continuous: distributions.iter().all(|d| !d.has_atom()),
    }
}

/// Ordered, validated list of independent observation laws `X_1..X_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance {
    distributions: Vec<Distribution>,
    #[serde(skip)]
    all_continuous: bool,
}

impl ProblemInstance {
    pub fn new(distributions: Vec<Distribution>) -> Result<Self> {
        let report = validate_instance(&distributions);
        if !report.is_valid() {
            return Err(Error::InvalidInstance(report));
        }
        Ok(Self {
            distributions,
            all_continuous: report.all_continuous,
        })
    }

    /// `n` identical copies of `d`.
    pub fn iid(d: Distribution, n: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    pub fn distributions(&self) -> &[Distribution] {
        &self.distributions
    }

    pub fn get(&self, i: usize) -> &Distribution {
        &self.distributions[i]
    }

    pub fn all_continuous(&self) -> bool {
        self.all_continuous
    }

    /// Error unless every law is atomless.
    pub fn require_continuous(&self) -> Result<()> {
        match self.distributions.iter().position(Distribution::has_atom) {
            Some(index) => Err(Error::Continuity { index }),
            None => Ok(()),
        }
    }

    /// Parse the JSON instance format `{"distributions": [...]}`.
    ///
    /// Malformed or unknown kinds are reported with their 0-based position.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct RawInstance {
            distributions: Vec<serde_json::Value>,
        }
        let raw: RawInstance =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("instance file: {e}")))?;
        let distributions = raw
            .distributions
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value::<Distribution>(v)
                    .map_err(|e| Error::Validation(format!("distribution {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(distributions)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instances always serialize")
    }

    /// Smallest and largest support bound over all laws.
    pub fn support_hull(&self) -> (f64, f64) {
        self.distributions
            .iter()
            .map(Distribution::support)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }
}

/// The disjoint-support instance whose optimal win probability is exactly
/// `(1 - 1/n)^(n-1)`.
pub fn make_extremal_instance(n: usize) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::Domain("extremal instance needs n >= 1".to_string()));
    }
    ProblemInstance::new((1..=n).map(|i| Distribution::extremal(n, i)).collect())
}
