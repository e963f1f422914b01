//! Python bindings: scenarios, channel draws, the joint solver, sweeps and
//! the detector/special-function primitives.

use covert_irs::channel::{self, ChannelRealization, Target};
use covert_irs::montecarlo::{self, ExperimentSpec, SweepParameter};
use covert_irs::optimizer::{self, SolveOptions};
use covert_irs::specfun::{self, NoiseUncertaintyModel};
use covert_irs::{detector, Error};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model(sigma2_n: f64, rho: f64) -> PyResult<NoiseUncertaintyModel> {
    NoiseUncertaintyModel::new(sigma2_n, rho).map_err(py_err)
}

/// Collinear Alice–IRS–Bob geometry with Willie off axis. Powers in watts.
#[pyclass(module = "covert_irs", frozen)]
struct Scenario {
    inner: channel::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (distance=10.0, n_units=25, sigma2_n=1e-9, rho=5.0, *, sigma2_b=None, xi=0.99, p_max=1e-3, alpha=3.0, tx_prob=0.5))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        distance: f64,
        n_units: usize,
        sigma2_n: f64,
        rho: f64,
        sigma2_b: Option<f64>,
        xi: f64,
        p_max: f64,
        alpha: f64,
        tx_prob: f64,
    ) -> PyResult<Self> {
        let mut s = channel::Scenario::linear(distance, n_units, model(sigma2_n, rho)?);
        s.sigma2_b = sigma2_b.unwrap_or(sigma2_n);
        s.xi = xi;
        s.p_max = p_max;
        s.alpha = alpha;
        s.tx_prob = tx_prob;
        s.validate().map_err(py_err)?;
        Ok(Self { inner: s })
    }

    #[getter]
    fn n_units(&self) -> usize {
        self.inner.n_units
    }

    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.inner.xi
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.noise_model.rho()
    }

    /// Draw one fading realization from a seeded stream.
    fn sample(&self, seed: u64) -> PyResult<Realization> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        channel::sample_realization(&self.inner, &mut rng)
            .map(|inner| Realization { inner })
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(n_units={}, rho={}, xi={}, p_max={})",
            self.inner.n_units,
            self.inner.noise_model.rho(),
            self.inner.xi,
            self.inner.p_max
        )
    }
}

#[pyclass(module = "covert_irs", frozen)]
struct Realization {
    inner: ChannelRealization,
}

#[pymethods]
impl Realization {
    #[getter]
    fn n_units(&self) -> usize {
        self.inner.n_units()
    }

    #[getter]
    fn h_ab(&self) -> Complex64 {
        self.inner.h_ab
    }

    #[getter]
    fn h_aw(&self) -> Complex64 {
        self.inner.h_aw
    }

    /// Received amplitude at `"bob"` or `"willie"` for the given phases.
    fn amplitude(&self, phases: Vec<f64>, target: &str) -> PyResult<Complex64> {
        let t = parse_target(target)?;
        channel::effective_amplitude(&self.inner, &channel::IrsConfiguration::new(phases), t).map_err(py_err)
    }

    /// Phases that co-phase every path at the target.
    fn align(&self, target: &str) -> PyResult<Vec<f64>> {
        Ok(optimizer::align_phases(&self.inner, parse_target(target)?).phases().to_vec())
    }
}

fn parse_target(s: &str) -> PyResult<Target> {
    match s {
        "bob" => Ok(Target::Bob),
        "willie" => Ok(Target::Willie),
        _ => Err(PyValueError::new_err(format!("target must be 'bob' or 'willie', got {s:?}"))),
    }
}

#[pyclass(module = "covert_irs", frozen, get_all)]
struct Solution {
    phases: Vec<f64>,
    p_a: f64,
    rate: f64,
    feasible: bool,
    feasible_at_p_max: bool,
    tau: f64,
    pfa: f64,
    pmd: f64,
}

impl From<optimizer::SolveResult> for Solution {
    fn from(r: optimizer::SolveResult) -> Self {
        Self {
            phases: r.phases.phases().to_vec(),
            p_a: r.p_a,
            rate: r.rate,
            feasible: r.feasible,
            feasible_at_p_max: r.feasible_at_p_max,
            tau: r.outcome.tau,
            pfa: r.outcome.pfa,
            pmd: r.outcome.pmd,
        }
    }
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!("Solution(rate={}, p_a={}, feasible={})", self.rate, self.p_a, self.feasible)
    }
}

fn options(restarts: usize, phase_grid: usize, power_grid: usize, rng_seed: u64) -> SolveOptions {
    SolveOptions {
        restarts,
        phase_grid,
        power_grid,
        rng_seed,
        ..SolveOptions::default()
    }
}

/// Jointly optimise IRS phases and transmit power for one realization.
#[pyfunction]
#[pyo3(signature = (realization, scenario, restarts=2, phase_grid=16, power_grid=16, rng_seed=0))]
fn solve_joint(
    realization: &Realization,
    scenario: &Scenario,
    restarts: usize,
    phase_grid: usize,
    power_grid: usize,
    rng_seed: u64,
) -> PyResult<Solution> {
    let opts = options(restarts, phase_grid, power_grid, rng_seed);
    optimizer::solve_joint(&realization.inner, &scenario.inner, &opts)
        .map(Solution::from)
        .map_err(py_err)
}

/// Power-only optimum over the direct paths.
#[pyfunction]
fn solve_no_irs(realization: &Realization, scenario: &Scenario) -> PyResult<Solution> {
    optimizer::solve_no_irs(&realization.inner, &scenario.inner, &SolveOptions::default())
        .map(Solution::from)
        .map_err(py_err)
}

#[pyclass(module = "covert_irs", frozen, get_all)]
struct SweepPoint {
    sweep_value: f64,
    mean_rate: f64,
    std_err: f64,
    feasibility_rate: f64,
    mean_pa_watts: f64,
}

/// Monte Carlo sweep over `p_max_dbm`, `d`, `n_units` or `rho`.
#[pyfunction]
#[pyo3(signature = (scenario, parameter, values, realizations=100, seed=1, with_irs=true))]
fn run_sweep(
    py: Python<'_>,
    scenario: &Scenario,
    parameter: &str,
    values: Vec<f64>,
    realizations: usize,
    seed: u64,
    with_irs: bool,
) -> PyResult<Vec<SweepPoint>> {
    let parameter = match parameter {
        "p_max_dbm" | "p_max" => SweepParameter::PMaxDbm,
        "d" | "distance" => SweepParameter::Distance,
        "n_units" => SweepParameter::NUnits,
        "rho" => SweepParameter::Rho,
        other => return Err(PyValueError::new_err(format!("unknown sweep parameter {other:?}"))),
    };
    let spec = ExperimentSpec {
        scenario: scenario.inner.clone(),
        parameter,
        values,
        realizations,
        seed,
        with_irs,
        solver: SolveOptions::default(),
    };
    let result = py.detach(|| montecarlo::run_sweep(&spec)).map_err(py_err)?;
    Ok(result
        .points
        .into_iter()
        .map(|p| SweepPoint {
            sweep_value: p.sweep_value,
            mean_rate: p.mean_rate,
            std_err: p.std_err,
            feasibility_rate: p.feasibility_rate,
            mean_pa_watts: p.mean_pa_watts,
        })
        .collect())
}

#[pyfunction]
fn pfa(sigma2_n: f64, rho: f64, tau: f64) -> PyResult<f64> {
    Ok(detector::pfa(&model(sigma2_n, rho)?, tau))
}

#[pyfunction]
fn pmd_actual(sigma2_n: f64, rho: f64, tau: f64, s_w: f64) -> PyResult<f64> {
    Ok(detector::pmd_actual(&model(sigma2_n, rho)?, tau, s_w))
}

#[pyfunction]
fn expected_pmd_apriori(sigma2_n: f64, rho: f64, lam: f64, tau: f64) -> PyResult<f64> {
    Ok(detector::expected_pmd_apriori(&model(sigma2_n, rho)?, lam, tau))
}

#[pyfunction]
fn optimal_threshold(sigma2_n: f64, rho: f64, lam: f64) -> PyResult<f64> {
    detector::optimal_threshold(&model(sigma2_n, rho)?, lam).map_err(py_err)
}

#[pyfunction]
fn max_covert_leakage(sigma2_n: f64, rho: f64, lam: f64, xi: f64) -> PyResult<f64> {
    detector::max_covert_leakage(&model(sigma2_n, rho)?, lam, xi).map_err(py_err)
}

#[pyfunction]
fn lambert_w0(z: f64) -> PyResult<f64> {
    specfun::lambert_w0(z).map_err(py_err)
}

#[pyfunction]
fn lambert_wm1(z: f64) -> PyResult<f64> {
    specfun::lambert_wm1(z).map_err(py_err)
}

#[pyfunction]
fn expint_ei(x: f64) -> PyResult<f64> {
    specfun::expint_ei(x).map_err(py_err)
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    montecarlo::dbm_to_watts(dbm)
}

#[pymodule]
#[pyo3(name = "covert_irs")]
fn covert_irs_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Realization>()?;
    m.add_class::<Solution>()?;
    m.add_class::<SweepPoint>()?;
    m.add_function(wrap_pyfunction!(solve_joint, m)?)?;
    m.add_function(wrap_pyfunction!(solve_no_irs, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(pfa, m)?)?;
    m.add_function(wrap_pyfunction!(pmd_actual, m)?)?;
    m.add_function(wrap_pyfunction!(expected_pmd_apriori, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(max_covert_leakage, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w0, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_wm1, m)?)?;
    m.add_function(wrap_pyfunction!(expint_ei, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    Ok(())
}
