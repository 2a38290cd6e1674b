//! Python bindings for the alternating-relaxed-projections solver.
//!
//! Structured values cross the boundary as JSON strings using the same
//! schemas as the CLI and config files: sets like
//! `{"type": "finite", "points": [[-3.0], [2.0]]}`, schedules like
//! `{"type": "constant", "value": 0.5}`, and full experiment configs like
//! the ones under `configs/`. Scalars and points are plain Python floats
//! and lists. Every error raises `ValueError` with the library's message.
//!
//! ```python
//! import json, marp_py
//! cfg = json.dumps({
//!     "dimension": 1,
//!     "setA": {"type": "finite", "points": [[-3.0], [2.0]]},
//!     "setB": {"type": "finite", "points": [[-3.0], [6.0]]},
//!     "lambda": {"type": "constant", "value": 0.5},
//!     "mu": {"type": "constant", "value": 0.5},
//!     "start": [0.0],
//! })
//! summary = json.loads(marp_py.run(cfg))
//! assert summary["status"] == "converged"
//! ```

// The #[pyfunction] expansion converts PyErr to PyErr, which trips this
// lint on every binding; it never fires on hand-written code here.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use marp::cones;
use marp::config::ExperimentConfig;
use marp::geometry::{self, ClosedSet, TiePolicy};
use marp::rates;
use marp::schedules::Schedule;
use marp::solver;

/// One recorded iterate: `(n, x, y)`.
type OrbitRow = (u64, Vec<f64>, Vec<f64>);

fn lib_err(e: marp::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_set(json: &str) -> PyResult<ClosedSet> {
    let set: ClosedSet = serde_json::from_str(json)
        .map_err(|e| PyValueError::new_err(format!("invalid set JSON: {e}")))?;
    set.validate().map_err(lib_err)?;
    Ok(set)
}

fn parse_schedule(json: &str) -> PyResult<Schedule> {
    let s: Schedule = serde_json::from_str(json)
        .map_err(|e| PyValueError::new_err(format!("invalid schedule JSON: {e}")))?;
    s.validate().map_err(lib_err)?;
    Ok(s)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Distance from `point` to the set.
#[pyfunction]
fn distance(set_json: &str, point: Vec<f64>) -> PyResult<f64> {
    parse_set(set_json)?.distance(&point).map_err(lib_err)
}

/// Full projection: `(distance, nearest_points)` with the nearest points
/// lexicographically sorted.
#[pyfunction]
fn project(set_json: &str, point: Vec<f64>) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let proj = parse_set(set_json)?.project(&point).map_err(lib_err)?;
    Ok((proj.distance, proj.nearest))
}

/// Whether `point` lies within `tol·(1 + ‖point‖)` of the set.
#[pyfunction]
#[pyo3(signature = (set_json, point, tol=1e-9))]
fn membership(set_json: &str, point: Vec<f64>, tol: f64) -> PyResult<bool> {
    parse_set(set_json)?
        .membership(&point, tol)
        .map_err(lib_err)
}

/// One relaxed projection step from `y` with parameter `lam`:
/// `(x, a)` where `a` is the selected nearest point (lexicographic ties)
/// and `x = (1−lam)·y + lam·a`.
#[pyfunction]
fn relaxed_step(set_json: &str, y: Vec<f64>, lam: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    geometry::relaxed_project(&parse_set(set_json)?, &y, lam, TiePolicy::LexMin, None)
        .map_err(lib_err)
}

/// Value of a schedule at iteration `n`.
#[pyfunction]
fn schedule_value(schedule_json: &str, n: u64) -> PyResult<f64> {
    parse_schedule(schedule_json)?.value(n).map_err(lib_err)
}

/// Run an experiment config (the same JSON schema as `configs/*.json`)
/// and return the run summary as a JSON string: status, iterations,
/// limit, cycle_period, final_gap, and the empirical-rate fit over the
/// trailing `rate_window` recorded iterates.
#[pyfunction]
#[pyo3(signature = (config_json, rate_window=40))]
fn run(config_json: &str, rate_window: usize) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config_json).map_err(lib_err)?;
    let t = solver::run(&cfg.to_marp_config().map_err(lib_err)?).map_err(lib_err)?;
    Ok(solver::summary_json(&t, rate_window).to_string())
}

/// Run an experiment config and return the recorded orbit as a list of
/// `(n, x, y)` tuples.
#[pyfunction]
fn orbit(config_json: &str) -> PyResult<Vec<OrbitRow>> {
    let cfg = ExperimentConfig::parse(config_json).map_err(lib_err)?;
    let t = solver::run(&cfg.to_marp_config().map_err(lib_err)?).map_err(lib_err)?;
    Ok(t.iterates
        .into_iter()
        .map(|it| (it.n, it.x, it.y))
        .collect())
}

/// Run an experiment config and return the trajectory table as CSV —
/// byte-identical to what the command-line `run` writes.
#[pyfunction]
fn trajectory_csv(config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config_json).map_err(lib_err)?;
    let t = solver::run(&cfg.to_marp_config().map_err(lib_err)?).map_err(lib_err)?;
    Ok(solver::trajectory_csv(&t))
}

/// Gap-decay certificate `ρ̂` for a schedule pair under angle bound
/// `theta`, as a JSON string (fields: value, upper_bound, alpha0, …).
#[pyfunction]
#[pyo3(signature = (lambda_json, mu_json, theta=0.0, horizon=10_000))]
fn rho_hat(lambda_json: &str, mu_json: &str, theta: f64, horizon: u64) -> PyResult<String> {
    let cert = rates::rho_hat(
        &parse_schedule(lambda_json)?,
        &parse_schedule(mu_json)?,
        theta,
        horizon,
    )
    .map_err(lib_err)?;
    to_json(&cert)
}

/// Gap-decay certificate `κ̂` under an ε-regularity assumption, as JSON.
#[pyfunction]
#[pyo3(signature = (lambda_json, mu_json, theta, eps, horizon=10_000))]
fn kappa_hat(
    lambda_json: &str,
    mu_json: &str,
    theta: f64,
    eps: f64,
    horizon: u64,
) -> PyResult<String> {
    let cert = rates::kappa_hat(
        &parse_schedule(lambda_json)?,
        &parse_schedule(mu_json)?,
        theta,
        eps,
        horizon,
    )
    .map_err(lib_err)?;
    to_json(&cert)
}

/// Ratio-supremum certificate `η` of a schedule pair, as JSON.
#[pyfunction]
#[pyo3(signature = (lambda_json, mu_json, horizon=10_000))]
fn eta(lambda_json: &str, mu_json: &str, horizon: u64) -> PyResult<String> {
    let cert = rates::eta(
        &parse_schedule(lambda_json)?,
        &parse_schedule(mu_json)?,
        horizon,
    )
    .map_err(lib_err)?;
    to_json(&cert)
}

/// Start bound from an angle-condition slack: JSON `{delta, radius}`.
#[pyfunction]
fn cq_delta(slack: f64, rho_hat: f64, alpha0: f64) -> PyResult<String> {
    to_json(&rates::cq_delta(slack, rho_hat, alpha0).map_err(lib_err)?)
}

/// Guaranteed local-convergence envelope from a `κ̂` certificate: JSON
/// `{start_radius, coefficient, rate, unrelaxed}`.
#[pyfunction]
fn regularity_ball(delta: f64, kappa_hat: f64, alpha0: f64) -> PyResult<String> {
    to_json(&rates::regularity_ball(delta, kappa_hat, alpha0).map_err(lib_err)?)
}

/// How far the limit of a geometrically damped run can sit from the start:
/// `2·alpha0·(1+alpha0)/(1−eta)·max(d_a, d_b)`.
#[pyfunction]
fn vanishing_limit_bound(alpha0: f64, eta: f64, d_a: f64, d_b: f64) -> PyResult<f64> {
    rates::vanishing_limit_bound(alpha0, eta, d_a, d_b).map_err(lib_err)
}

/// Joint-angle (CQ) report for two sets with restrictions, as JSON
/// (field `theta_delta` is the angle number). `method` is `"exact2d"`
/// or `"sampled"`; `samples` and `seed` apply to the sampled method.
#[pyfunction]
#[pyo3(signature = (set_a, restrict_a, set_b, restrict_b, center, delta,
                    method="exact2d", samples=10_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn cq_number(
    set_a: &str,
    restrict_a: &str,
    set_b: &str,
    restrict_b: &str,
    center: Vec<f64>,
    delta: f64,
    method: &str,
    samples: u64,
    seed: u64,
) -> PyResult<String> {
    let m = match method {
        "exact2d" => cones::CqMethod::Exact2d,
        "sampled" => cones::CqMethod::Sampled { samples, seed },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}': expected 'exact2d' or 'sampled'"
            )))
        }
    };
    let report = cones::cq_number(
        &parse_set(set_a)?,
        &parse_set(restrict_a)?,
        &parse_set(set_b)?,
        &parse_set(restrict_b)?,
        &center,
        delta,
        m,
    )
    .map_err(lib_err)?;
    to_json(&report)
}

/// Sampled lower bound on the regularity constant ε of a set near
/// `center`, with proximal-normal generators drawn from `restriction`.
#[pyfunction]
#[pyo3(signature = (set_json, restriction_json, center, delta, samples=1000, seed=0))]
fn regularity_probe(
    set_json: &str,
    restriction_json: &str,
    center: Vec<f64>,
    delta: f64,
    samples: u64,
    seed: u64,
) -> PyResult<f64> {
    cones::regularity_probe(
        &parse_set(set_json)?,
        &parse_set(restriction_json)?,
        &center,
        delta,
        samples,
        seed,
    )
    .map_err(lib_err)
}

#[pymodule]
fn marp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(membership, m)?)?;
    m.add_function(wrap_pyfunction!(relaxed_step, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_value, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(orbit, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory_csv, m)?)?;
    m.add_function(wrap_pyfunction!(rho_hat, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_hat, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(cq_delta, m)?)?;
    m.add_function(wrap_pyfunction!(regularity_ball, m)?)?;
    m.add_function(wrap_pyfunction!(vanishing_limit_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cq_number, m)?)?;
    m.add_function(wrap_pyfunction!(regularity_probe, m)?)?;
    Ok(())
}
