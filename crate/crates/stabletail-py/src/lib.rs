//! Python bindings for the stabletail toolkit.
//!
//! The surface mirrors the Rust API: seeded samplers, moment statistics,
//! growth curves, the two tail-index estimators, the bootstrap test, the
//! log-return helpers, and the experiment harness. Report structs cross the
//! boundary as plain dicts/lists (via their serde form), so results look the
//! same here as in the CLI's JSON output. Seeds are explicit everywhere,
//! matching the library's provenance rules.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyList, PyString};
use serde_json::Value as JsonValue;

use stabletail::distributions::SeedSpec;
use stabletail::experiments::{ExperimentConfig, ExperimentKind};
use stabletail::moments::GrowthCurve;
use stabletail::returns_ingest::PriceSeries;
use stabletail::{Error, StableParams, StudentTParams};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Io(_) | Error::Csv(_) => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// serde_json -> Python objects, so every report struct crosses as a dict.
fn json_to_py<'py>(py: Python<'py>, v: &JsonValue) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        JsonValue::Null => py.None().into_bound(py),
        JsonValue::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        JsonValue::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                PyFloat::new(py, n.as_f64().unwrap_or(f64::NAN)).into_any()
            }
        }
        JsonValue::String(s) => PyString::new(py, s).into_any(),
        JsonValue::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        JsonValue::Object(map) => {
            let dict = PyDict::new(py);
            for (key, val) in map {
                dict.set_item(key, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(
    py: Python<'py>,
    value: &T,
) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

/// Draw a symmetric alpha-stable sample (sigma-scaled, mu-shifted).
#[pyfunction]
#[pyo3(signature = (alpha, n, master_seed, *, sigma = 1.0, mu = 0.0, stream_id = 0))]
fn sample_stable(
    alpha: f64,
    n: usize,
    master_seed: u64,
    sigma: f64,
    mu: f64,
    stream_id: u64,
) -> PyResult<Vec<f64>> {
    let params = StableParams::new(alpha, sigma, mu).map_err(to_py_err)?;
    Ok(stabletail::distributions::sample_symmetric_stable(
        &params,
        n,
        SeedSpec::new(master_seed, stream_id),
    ))
}

/// Draw a Student-t sample with nu degrees of freedom.
#[pyfunction]
#[pyo3(signature = (nu, n, master_seed, *, stream_id = 0))]
fn sample_student_t(nu: f64, n: usize, master_seed: u64, stream_id: u64) -> PyResult<Vec<f64>> {
    let params = StudentTParams::new(nu).map_err(to_py_err)?;
    Ok(stabletail::distributions::sample_student_t(
        &params,
        n,
        SeedSpec::new(master_seed, stream_id),
    ))
}

/// Draw a centered Gaussian sample with standard deviation sigma.
#[pyfunction]
#[pyo3(signature = (n, master_seed, *, sigma = 1.0, stream_id = 0))]
fn sample_gaussian(n: usize, master_seed: u64, sigma: f64, stream_id: u64) -> PyResult<Vec<f64>> {
    stabletail::distributions::sample_gaussian(sigma, n, SeedSpec::new(master_seed, stream_id))
        .map_err(to_py_err)
}

/// Full moment summary: n, mean, m2..m4, g1, b2, g2, c.
#[pyfunction]
fn compute_stats<'py>(py: Python<'py>, sample: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let stats = stabletail::moments::compute_stats(&sample).map_err(to_py_err)?;
    serialize_to_py(py, &stats)
}

/// Sample excess kurtosis g2 = b2 - 3.
#[pyfunction]
fn excess_kurtosis(sample: Vec<f64>) -> PyResult<f64> {
    stabletail::moments::excess_kurtosis(&sample).map_err(to_py_err)
}

/// Kurtosis ratio c = b2 / n, always in (0, 1].
#[pyfunction]
fn kurtosis_ratio(sample: Vec<f64>) -> PyResult<f64> {
    stabletail::moments::kurtosis_ratio(&sample).map_err(to_py_err)
}

/// Sample skewness g1.
#[pyfunction]
fn skewness(sample: Vec<f64>) -> PyResult<f64> {
    stabletail::moments::skewness(&sample).map_err(to_py_err)
}

/// Excess kurtosis on growing prefixes; returns [(n, g2), ...].
#[pyfunction]
fn growth_curve(sample: Vec<f64>, checkpoints: Vec<usize>) -> PyResult<Vec<(usize, f64)>> {
    let curve = stabletail::moments::growth_curve(&sample, &checkpoints).map_err(to_py_err)?;
    Ok(curve.points().to_vec())
}

/// Least-squares line through a growth curve given as [(n, g2), ...].
#[pyfunction]
fn fit_growth_slope<'py>(
    py: Python<'py>,
    points: Vec<(usize, f64)>,
) -> PyResult<Bound<'py, PyAny>> {
    let curve = GrowthCurve::from_points(points).map_err(to_py_err)?;
    let fit = stabletail::tail_inference::fit_growth_slope(&curve).map_err(to_py_err)?;
    serialize_to_py(py, &fit)
}

/// Linear-vs-quadratic diagnostic on a growth curve.
#[pyfunction]
#[pyo3(signature = (points, *, threshold = None))]
fn linearity_diagnostic<'py>(
    py: Python<'py>,
    points: Vec<(usize, f64)>,
    threshold: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let curve = GrowthCurve::from_points(points).map_err(to_py_err)?;
    let report = match threshold {
        Some(t) => stabletail::tail_inference::linearity_diagnostic_with_threshold(&curve, t),
        None => stabletail::tail_inference::linearity_diagnostic(&curve),
    }
    .map_err(to_py_err)?;
    serialize_to_py(py, &report)
}

/// Invert mean excess kurtosis to a tail index: alpha = 2(1 - g2/n), clamped.
#[pyfunction]
fn alpha_from_kurtosis<'py>(py: Python<'py>, g2: f64, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let est = stabletail::tail_inference::alpha_from_kurtosis(g2, n).map_err(to_py_err)?;
    serialize_to_py(py, &est)
}

/// Characteristic-function (Kogon–Williams) estimate of alpha and sigma.
#[pyfunction]
fn kogon_williams<'py>(py: Python<'py>, sample: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let est = stabletail::tail_inference::kogon_williams(&sample).map_err(to_py_err)?;
    serialize_to_py(py, &est)
}

/// Percentile-bootstrap test of alpha < 2 on the unclamped estimator.
#[pyfunction]
#[pyo3(signature = (sample, master_seed, *, b = 1000, level = 0.05, stream_id = 0))]
fn bootstrap_alpha_test<'py>(
    py: Python<'py>,
    sample: Vec<f64>,
    master_seed: u64,
    b: usize,
    level: f64,
    stream_id: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let result = stabletail::tail_inference::bootstrap_alpha_test(
        &sample,
        b,
        level,
        SeedSpec::new(master_seed, stream_id),
    )
    .map_err(to_py_err)?;
    serialize_to_py(py, &result)
}

/// Log returns ln(p_t / p_{t-1}) of a positive close-price sequence.
#[pyfunction]
fn log_returns(closes: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(price_series(closes)?.1)
}

/// Rolling excess kurtosis of a return sequence: [(n, g2), ...] at prefix
/// lengths 4 + step, 4 + 2*step, ...
#[pyfunction]
#[pyo3(signature = (closes, *, step = 10))]
fn rolling_kurtosis(closes: Vec<f64>, step: usize) -> PyResult<Vec<(usize, f64)>> {
    let (series, _) = price_series(closes)?;
    let returns = stabletail::returns_ingest::log_returns(&series).map_err(to_py_err)?;
    let curve = stabletail::returns_ingest::rolling_kurtosis(&returns, step).map_err(to_py_err)?;
    Ok(curve.points().to_vec())
}

/// Both tail-index estimators plus moment stats on half-open return windows.
#[pyfunction]
fn window_estimates<'py>(
    py: Python<'py>,
    closes: Vec<f64>,
    windows: Vec<(usize, usize)>,
) -> PyResult<Bound<'py, PyAny>> {
    let (series, _) = price_series(closes)?;
    let returns = stabletail::returns_ingest::log_returns(&series).map_err(to_py_err)?;
    let reports =
        stabletail::returns_ingest::window_estimates(&returns, &windows).map_err(to_py_err)?;
    serialize_to_py(py, &reports)
}

/// Dates are synthetic consecutive days: the numeric bindings work on bare
/// close sequences, while the CLI handles real dated CSVs.
fn price_series(closes: Vec<f64>) -> PyResult<(PriceSeries, Vec<f64>)> {
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let observations: Vec<(chrono::NaiveDate, f64)> = closes
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            (
                start
                    .checked_add_days(chrono::Days::new(i as u64))
                    .expect("date in range"),
                c,
            )
        })
        .collect();
    let series = PriceSeries::new(observations, "python").map_err(to_py_err)?;
    let returns = stabletail::returns_ingest::log_returns(&series)
        .map_err(to_py_err)?
        .returns()
        .to_vec();
    Ok((series, returns))
}

/// The paper-protocol preset for an experiment kind, as a config dict.
#[pyfunction]
fn preset_config<'py>(
    py: Python<'py>,
    kind: &str,
    master_seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: ExperimentKind = kind.parse().map_err(to_py_err)?;
    let config = ExperimentConfig::preset(kind, master_seed);
    serialize_to_py(py, &config)
}

/// Run a Monte Carlo experiment from a config JSON string; returns the
/// summary document (config + aggregated results) as a dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let config = ExperimentConfig::from_json_str(config_json).map_err(to_py_err)?;
    let report = stabletail::experiments::run_experiment(&config).map_err(to_py_err)?;
    let summary: JsonValue = serde_json::from_str(&report.summary_json())
        .map_err(|e| PyValueError::new_err(format!("summary did not round-trip: {e}")))?;
    json_to_py(py, &summary)
}

#[pymodule]
fn stabletail_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_stable, m)?)?;
    m.add_function(wrap_pyfunction!(sample_student_t, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(compute_stats, m)?)?;
    m.add_function(wrap_pyfunction!(excess_kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(kurtosis_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(skewness, m)?)?;
    m.add_function(wrap_pyfunction!(growth_curve, m)?)?;
    m.add_function(wrap_pyfunction!(fit_growth_slope, m)?)?;
    m.add_function(wrap_pyfunction!(linearity_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_from_kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(kogon_williams, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_alpha_test, m)?)?;
    m.add_function(wrap_pyfunction!(log_returns, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(window_estimates, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
