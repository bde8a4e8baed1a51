//! Python bindings. Reports cross the boundary as JSON strings or plain tuples.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use residue_lab::harness::{self, Format, RunOptions, Scenario};
use residue_lab::polycore::parse_poly;
use residue_lab::projgeom::Geometry;
use residue_lab::{localize, residue};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn geometry(section: Vec<String>, psi: String) -> PyResult<Geometry> {
    let n = section.len();
    let degrees = section
        .iter()
        .map(|s| parse_poly(s, n + 1).map(|p| p.degree()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    let scenario = Scenario {
        name: None,
        n,
        degrees,
        section,
        psi,
        metric: Default::default(),
        tasks: Vec::new(),
        backend: Default::default(),
        seed: None,
    };
    scenario.geometry().map_err(value_err)
}

/// Run a scenario given as a JSON string and return the JSON report.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed=None, samples=None))]
fn verify(
    py: Python<'_>,
    scenario_json: &str,
    seed: Option<u64>,
    samples: Option<usize>,
) -> PyResult<String> {
    let scenario = Scenario::from_json(scenario_json).map_err(value_err)?;
    let report = py
        .detach(|| harness::run(&scenario, RunOptions { seed, samples }))
        .map_err(value_err)?;
    Ok(String::from_utf8_lossy(&harness::emit_report(&report, Format::Json)).into_owned())
}

/// Run a scenario file and return the JSON report.
#[pyfunction]
#[pyo3(signature = (path, seed=None, samples=None))]
fn verify_file(
    py: Python<'_>,
    path: PathBuf,
    seed: Option<u64>,
    samples: Option<usize>,
) -> PyResult<String> {
    let report = py
        .detach(|| harness::run_scenario(&path, RunOptions { seed, samples }))
        .map_err(value_err)?;
    Ok(String::from_utf8_lossy(&harness::emit_report(&report, Format::Json)).into_owned())
}

/// JSON Schema of scenario files.
#[pyfunction]
fn schema() -> String {
    harness::schema().to_string()
}

/// Local residues at every zero of the section, as (affine point, residue)
/// pairs in chart z0, followed by the relative vanishing of their sum.
#[pyfunction]
#[pyo3(signature = (section, psi, seed=0))]
#[allow(clippy::type_complexity)]
fn residue_ledger(
    py: Python<'_>,
    section: Vec<String>,
    psi: String,
    seed: u64,
) -> PyResult<(Vec<(Vec<Complex64>, Complex64)>, f64)> {
    let geom = geometry(section, psi)?;
    let ledger = py
        .detach(|| residue::global_residue_sum(&geom, seed))
        .map_err(runtime_err)?;
    let entries = ledger
        .entries
        .iter()
        .map(|e| (e.coordinates(), e.value()))
        .collect();
    Ok((entries, ledger.relative_vanishing))
}

/// Monte Carlo estimate of the virtual residue integral at parameter t,
/// returned as (value, standard error).
#[pyfunction]
#[pyo3(signature = (section, psi, t=1.0, samples=100_000, seed=0))]
fn virtual_residue(
    py: Python<'_>,
    section: Vec<String>,
    psi: String,
    t: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(Complex64, f64)> {
    let geom = geometry(section, psi)?;
    let est = py
        .detach(|| localize::virtual_residue_mc(&geom, t, samples, seed))
        .map_err(runtime_err)?;
    Ok((est.value(), est.std_error))
}

/// Cayley-Bacharach check for two plane curves f, g in z0, z1, z2.
/// Returns (space dimensions, max residual, negative control).
#[pyfunction]
#[pyo3(signature = (f, g, seed=0))]
fn cayley_bacharach(
    py: Python<'_>,
    f: &str,
    g: &str,
    seed: u64,
) -> PyResult<(Vec<usize>, f64, f64)> {
    let f = parse_poly(f, 3).map_err(value_err)?;
    let g = parse_poly(g, 3).map_err(value_err)?;
    let r = py
        .detach(|| residue::cayley_bacharach_verify(&f, &g, seed))
        .map_err(runtime_err)?;
    Ok((r.space_dims, r.max_residual, r.negative_control))
}

#[pymodule(name = "residue_lab")]
fn residue_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(verify_file, m)?)?;
    m.add_function(wrap_pyfunction!(schema, m)?)?;
    m.add_function(wrap_pyfunction!(residue_ledger, m)?)?;
    m.add_function(wrap_pyfunction!(virtual_residue, m)?)?;
    m.add_function(wrap_pyfunction!(cayley_bacharach, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
