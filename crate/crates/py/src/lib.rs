//! Python bindings for the `edgetwin` simulator and training stack.
//!
//! Exposes the run configuration, the slot-stepped environment, and the
//! train/evaluate/check entry points. Structured results (per-slot metrics,
//! run summaries, audit verdicts) cross the boundary as plain Python
//! dicts/lists built from their canonical JSON form, so the Python side never
//! depends on Rust struct layout.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};

use edgetwin::config::{effective_toml, SimConfig};
use edgetwin::harness::audit::run_all_audits;
use edgetwin::harness::run::{evaluate, run_training, EvalOptions};
use edgetwin::harness::scheme::SchemeTag;
use edgetwin::Env;

fn err(e: edgetwin::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<SchemeTag> {
    SchemeTag::from_str(name).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Rebuild a `serde_json::Value` as native Python objects.
fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().unbind().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.unbind().into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.unbind().into_any()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .unbind()
                    .into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.unbind().into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.unbind().into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.unbind().into_any()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialization failed: {e}")))?;
    json_to_py(py, &json)
}

/// Validated run configuration (SI units internally).
#[pyclass(name = "SimConfig", skip_from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    inner: SimConfig,
}

#[pymethods]
impl PySimConfig {
    /// Built-in reference setup: 20 devices, 3 small cells, 100 ms slots.
    #[staticmethod]
    fn reference() -> Self {
        PySimConfig {
            inner: SimConfig::reference(),
        }
    }

    /// Load a unit-suffixed TOML config file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PySimConfig {
            inner: edgetwin::load_config(path).map_err(err)?,
        })
    }

    /// Parse a unit-suffixed TOML config string.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PySimConfig {
            inner: edgetwin::parse_config(text).map_err(err)?,
        })
    }

    /// Rebuild from the JSON form produced by `to_json` (validates).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: SimConfig = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("bad config JSON: {e}")))?;
        inner.validate().map_err(err)?;
        Ok(PySimConfig { inner })
    }

    /// Full SI-unit configuration as JSON (edit + `from_json` to override).
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Full SI-unit configuration as a nested dict.
    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &self.inner)
    }

    /// SHA-256 of the canonical serialized config.
    fn hash(&self) -> String {
        self.inner.hash()
    }

    /// Effective SI config as TOML (what a run records).
    fn effective_toml(&self) -> String {
        effective_toml(&self.inner)
    }

    #[getter]
    fn n_devices(&self) -> usize {
        self.inner.net.n_devices
    }

    #[getter]
    fn n_small_cells(&self) -> usize {
        self.inner.net.n_small_cells
    }

    #[getter]
    fn v_weight(&self) -> f64 {
        self.inner.lyapunov.v_weight
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(devices={}, small_cells={}, V={})",
            self.inner.net.n_devices, self.inner.net.n_small_cells, self.inner.lyapunov.v_weight
        )
    }
}

/// Slot-stepped offloading environment.
#[pyclass(name = "Env")]
struct PyEnv {
    inner: Env,
}

#[pymethods]
impl PyEnv {
    #[new]
    fn new(cfg: &PySimConfig, seed: u64) -> PyResult<Self> {
        Ok(PyEnv {
            inner: Env::new(cfg.inner.clone(), seed).map_err(err)?,
        })
    }

    /// Redraw the topology, clear queues, and return the initial observation.
    fn reset(&mut self) -> PyResult<Vec<f64>> {
        self.inner.reset().map_err(err)
    }

    /// Current observation vector.
    fn state(&self) -> Vec<f64> {
        self.inner.state().to_vec()
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    #[getter]
    fn slot(&self) -> u64 {
        self.inner.slot()
    }

    /// Running energy-per-bit estimate (J/bit; 0 before any bits complete).
    #[getter]
    fn ee_estimate(&self) -> f64 {
        self.inner.ee_estimate()
    }

    /// Project a raw `[0,1]^action_dim` vector and advance one slot.
    ///
    /// Returns `(next_state, reward, metrics)` where `metrics` is a dict of
    /// the slot's accounting (feasibility, objective, energies, bit flows,
    /// queue totals).
    fn step_raw(&mut self, py: Python<'_>, raw: Vec<f64>) -> PyResult<(Vec<f64>, f64, Py<PyAny>)> {
        let action = self.inner.project_action(&raw).map_err(err)?;
        let outcome = self.inner.step(&action).map_err(err)?;
        let metrics = serialize_to_py(py, &outcome.metrics)?;
        Ok((outcome.state, outcome.reward, metrics))
    }

    /// Versioned description of the observation/action layouts.
    fn schema(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.inner.schema())
    }

    fn __repr__(&self) -> String {
        format!(
            "Env(state_dim={}, action_dim={}, slot={})",
            self.inner.state_dim(),
            self.inner.action_dim(),
            self.inner.slot()
        )
    }
}

/// Train a learned scheme; returns the run summary as a dict.
///
/// `scheme` is one of "joint", "no-compute-alloc", "no-radio-alloc".
/// Artifacts (checkpoint, episode CSV, summary JSON) land in `out_dir` when
/// given.
#[pyfunction]
#[pyo3(signature = (cfg, scheme="joint", seed=1, out_dir=None))]
fn train(
    py: Python<'_>,
    cfg: &PySimConfig,
    scheme: &str,
    seed: u64,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let tag = parse_scheme(scheme)?;
    let (record, _) =
        run_training(&cfg.inner, tag, seed, out_dir.as_deref(), false).map_err(err)?;
    serialize_to_py(py, &record)
}

/// Evaluate a checkpoint or baseline over one episode; returns the summary.
#[pyfunction]
#[pyo3(signature = (cfg, scheme="greedy-drift", checkpoint=None, seed=1, out_dir=None, slots=None))]
fn evaluate_scheme(
    py: Python<'_>,
    cfg: &PySimConfig,
    scheme: &str,
    checkpoint: Option<PathBuf>,
    seed: u64,
    out_dir: Option<PathBuf>,
    slots: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let tag = parse_scheme(scheme)?;
    let opts = EvalOptions {
        slots,
        queue_trace: false,
    };
    let record = evaluate(
        &cfg.inner,
        tag,
        checkpoint.as_deref().map(Path::new),
        seed,
        out_dir.as_deref(),
        &opts,
    )
    .map_err(err)?;
    serialize_to_py(py, &record)
}

/// Run the self-check battery; returns a list of
/// `{"name", "pass", "detail"}` dicts.
#[pyfunction]
#[pyo3(signature = (cfg, seed=1))]
fn check(py: Python<'_>, cfg: &PySimConfig, seed: u64) -> PyResult<Py<PyAny>> {
    let outcomes = run_all_audits(&cfg.inner, seed).map_err(err)?;
    serialize_to_py(py, &outcomes)
}

/// Scheme tags accepted by `train`/`evaluate_scheme`.
#[pyfunction]
fn scheme_names() -> Vec<String> {
    SchemeTag::ALL.iter().map(|s| s.to_string()).collect()
}

#[pymodule]
fn edgetwin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimConfig>()?;
    m.add_class::<PyEnv>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(scheme_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
