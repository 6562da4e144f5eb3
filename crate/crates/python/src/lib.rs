//! Python bindings. Structured reports come back as plain dicts.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use stoprule_core::check::{run_checks as run_checks_core, CheckConfig};
use stoprule_core::numeric::Probability;
use stoprule_core::policy::solve_instance;
use stoprule_core::{
    Distribution, EngineConfig, Error, OddsVector, ProblemInstance, RandomStream, SimConfig, ThresholdPolicy, VSequence,
};

create_exception!(stoprule, StopruleError, PyException);
create_exception!(stoprule, CapacityError, StopruleError);
create_exception!(stoprule, NumericalError, StopruleError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capacity { .. } => CapacityError::new_err(e.to_string()),
        Error::Numerical(_) => NumericalError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| StopruleError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn engine(grid_points: Option<usize>) -> PyResult<EngineConfig> {
    let cfg = grid_points.map(EngineConfig::with_grid).unwrap_or_default();
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

#[pyclass(name = "Distribution", module = "stoprule", frozen, from_py_object)]
#[derive(Clone)]
struct PyDistribution(Distribution);

impl PyDistribution {
    fn checked(d: Distribution) -> PyResult<Self> {
        d.validate().map_err(to_py)?;
        Ok(Self(d))
    }
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn uniform(low: f64, high: f64) -> PyResult<Self> {
        Self::checked(Distribution::uniform(low, high))
    }

    #[staticmethod]
    fn two_point(low_value: f64, high_value: f64, p_high: f64) -> PyResult<Self> {
        Self::checked(Distribution::two_point(low_value, high_value, p_high))
    }

    /// CDF interpolating the `(x, F(x))` knots.
    #[staticmethod]
    fn piecewise(knots: Vec<(f64, f64)>) -> PyResult<Self> {
        Self::checked(Distribution::piecewise(&knots))
    }

    #[staticmethod]
    fn extremal(n: usize, index: usize) -> PyResult<Self> {
        Self::checked(Distribution::extremal(n, index))
    }

    #[staticmethod]
    fn point_mass(value: f64) -> PyResult<Self> {
        Self::checked(Distribution::point_mass(value))
    }

    #[staticmethod]
    fn discrete(atoms: Vec<(f64, f64)>) -> PyResult<Self> {
        Self::checked(Distribution::discrete(&atoms))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.0.sf(x)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(PyValueError::new_err(format!("quantile level must lie in [0, 1], got {u}")));
        }
        Ok(self.0.quantile(u))
    }

    fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    fn has_atom(&self) -> bool {
        self.0.has_atom()
    }

    /// `count` draws from stream `index` of `seed`.
    #[pyo3(signature = (count, seed, index = 0))]
    fn sample(&self, count: usize, seed: u64, index: u64) -> Vec<f64> {
        let mut stream = RandomStream::new(seed, index);
        (0..count).map(|_| self.0.sample(&mut stream)).collect()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("distribution serializes")
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.to_json())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyclass(name = "ProblemInstance", module = "stoprule", frozen)]
struct PyInstance(ProblemInstance);

#[pymethods]
impl PyInstance {
    #[new]
    fn new(distributions: Vec<PyDistribution>) -> PyResult<Self> {
        ProblemInstance::new(distributions.into_iter().map(|d| d.0).collect())
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn iid(distribution: PyDistribution, n: usize) -> PyResult<Self> {
        ProblemInstance::iid(distribution.0, n).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ProblemInstance::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn distributions(&self) -> Vec<PyDistribution> {
        self.0.distributions().iter().cloned().map(PyDistribution).collect()
    }

    fn all_continuous(&self) -> bool {
        self.0.all_continuous()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("ProblemInstance(n={})", self.0.len())
    }
}

#[pyclass(name = "ThresholdPolicy", module = "stoprule", frozen)]
struct PyPolicy(ThresholdPolicy);

#[pymethods]
impl PyPolicy {
    #[new]
    fn new(thresholds: Vec<f64>) -> Self {
        Self(ThresholdPolicy::new(thresholds))
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.0.thresholds.clone()
    }

    #[getter]
    fn anomalies(&self) -> Vec<String> {
        self.0.anomalies.clone()
    }

    /// Apply the rule to one observed path: `(stop_index, value, won)`, 1-based.
    fn run(&self, path: Vec<f64>) -> PyResult<(usize, f64, bool)> {
        let o = stoprule_core::run_policy(&self.0, &path).map_err(to_py)?;
        Ok((o.stop_index, o.value, o.won))
    }

    fn __len__(&self) -> usize {
        self.0.horizon()
    }

    fn __repr__(&self) -> String {
        format!("ThresholdPolicy({:?})", self.0.thresholds)
    }
}

#[pyclass(name = "OddsSolution", module = "stoprule", frozen, get_all)]
struct PyOddsSolution {
    s: usize,
    v: f64,
    sum_odds: f64,
    reversed_cumulative: Vec<f64>,
    crossing_index: Option<usize>,
    v_reversed: Option<f64>,
}

#[pymethods]
impl PyOddsSolution {
    fn __repr__(&self) -> String {
        format!("OddsSolution(s={}, v={})", self.s, self.v)
    }
}

impl From<stoprule_core::OddsSolution> for PyOddsSolution {
    fn from(s: stoprule_core::OddsSolution) -> Self {
        Self {
            s: s.s,
            v: s.v,
            sum_odds: s.sum_odds,
            reversed_cumulative: s.reversed_cumulative,
            crossing_index: s.crossing_index,
            v_reversed: s.v_reversed,
        }
    }
}

#[pyclass(name = "SimReport", module = "stoprule", frozen, get_all)]
struct PySimReport {
    estimate: f64,
    stderr: f64,
    ci95: (f64, f64),
    trials: u64,
    seed: u64,
    wins: u64,
}

#[pymethods]
impl PySimReport {
    fn covers(&self, value: f64) -> bool {
        self.ci95.0 <= value && value <= self.ci95.1
    }

    fn __repr__(&self) -> String {
        format!("SimReport(estimate={}, stderr={}, trials={})", self.estimate, self.stderr, self.trials)
    }
}

/// Optimal last-success rule for independent success probabilities `p`.
#[pyfunction]
fn solve_odds(p: Vec<f64>) -> PyResult<PyOddsSolution> {
    let odds = OddsVector::new(p).map_err(to_py)?;
    Ok(stoprule_core::solve_odds(&odds).into())
}

#[pyfunction]
fn bound_b(n: usize) -> PyResult<f64> {
    stoprule_core::bound_b(n).map_err(to_py)
}

#[pyfunction]
fn classical_secretary_value(n: usize) -> PyResult<PyOddsSolution> {
    stoprule_core::classical_secretary_value(n).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn make_extremal_instance(n: usize) -> PyResult<PyInstance> {
    stoprule_core::make_extremal_instance(n).map(PyInstance).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (instance, grid_points = None))]
fn optimal_value(instance: &PyInstance, grid_points: Option<usize>) -> PyResult<f64> {
    stoprule_core::optimal_value(&instance.0, &engine(grid_points)?).map_err(to_py)
}

/// Optimal value together with the threshold rule.
#[pyfunction]
#[pyo3(signature = (instance, grid_points = None))]
fn solve(instance: &PyInstance, grid_points: Option<usize>) -> PyResult<(f64, PyPolicy)> {
    let sol = solve_instance(&instance.0, &engine(grid_points)?).map_err(to_py)?;
    Ok((sol.value, PyPolicy(sol.policy)))
}

#[pyfunction]
#[pyo3(signature = (instance, grid_points = None))]
fn compute_thresholds(instance: &PyInstance, grid_points: Option<usize>) -> PyResult<PyPolicy> {
    solve(instance, grid_points).map(|(_, p)| p)
}

#[pyfunction]
#[pyo3(signature = (instance, grid_points = None))]
fn verify_reduction<'py>(py: Python<'py>, instance: &PyInstance, grid_points: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let r = stoprule_core::verify_reduction(&instance.0, &engine(grid_points)?).map_err(to_py)?;
    json_to_py(py, &r)
}

/// Value of the two-point sequence with the given upper-atom probabilities.
#[pyfunction]
fn v_sequence_value(p_high: Vec<f64>) -> PyResult<f64> {
    let v = VSequence::from_probabilities(p_high).map_err(to_py)?;
    Ok(stoprule_core::v_sequence_value(&v))
}

/// Exact optimum of a finite-support instance, as a dict with `value`,
/// `exact`, `stop_sets` and, when exact, `value_rational`.
#[pyfunction]
fn oracle_optimal_value<'py>(py: Python<'py>, instance: &PyInstance) -> PyResult<Bound<'py, PyAny>> {
    let d = stoprule_core::DiscreteInstance::from_problem(&instance.0).map_err(to_py)?;
    let out = match d.to_exact() {
        Ok(exact) => {
            let r = stoprule_core::oracle_optimal_value(&exact).map_err(to_py)?;
            serde_json::json!({
                "value": r.value.to_f64(),
                "exact": true,
                "value_rational": r.value.to_string(),
                "stop_sets": r.stop_sets,
            })
        }
        Err(Error::Capacity { .. }) => {
            let r = stoprule_core::oracle_optimal_value(&d).map_err(to_py)?;
            serde_json::json!({ "value": r.value, "exact": false, "stop_sets": r.stop_sets })
        }
        Err(e) => return Err(to_py(e)),
    };
    json_to_py(py, &out)
}

#[pyfunction]
#[pyo3(signature = (instance, policy, trials = 100_000, seed = 0))]
fn simulate(instance: &PyInstance, policy: &PyPolicy, trials: u64, seed: u64) -> PyResult<PySimReport> {
    let r = stoprule_core::simulate_win_probability(&instance.0, &policy.0, &SimConfig::new(trials, seed)).map_err(to_py)?;
    Ok(PySimReport {
        estimate: r.estimate,
        stderr: r.stderr,
        ci95: r.ci95,
        trials: r.trials,
        seed: r.seed,
        wins: r.wins,
    })
}

/// Randomized property suite; returns the report dict.
#[pyfunction]
#[pyo3(signature = (seed = None, instances = None, grid_points = None))]
fn run_checks<'py>(
    py: Python<'py>,
    seed: Option<u64>,
    instances: Option<usize>,
    grid_points: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let d = CheckConfig::default();
    let cfg = CheckConfig {
        seed: seed.unwrap_or(d.seed),
        instances: instances.unwrap_or(d.instances),
        engine: engine(grid_points)?,
        ..d
    };
    let r = run_checks_core(&cfg).map_err(to_py)?;
    json_to_py(py, &r)
}

#[pymodule]
fn stoprule(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("StopruleError", py.get_type::<StopruleError>())?;
    m.add("CapacityError", py.get_type::<CapacityError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyOddsSolution>()?;
    m.add_class::<PySimReport>()?;
    m.add_function(wrap_pyfunction!(solve_odds, m)?)?;
    m.add_function(wrap_pyfunction!(bound_b, m)?)?;
    m.add_function(wrap_pyfunction!(classical_secretary_value, m)?)?;
    m.add_function(wrap_pyfunction!(make_extremal_instance, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_value, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(compute_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(verify_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(v_sequence_value, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_optimal_value, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
