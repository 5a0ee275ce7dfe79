//! Python bindings for `condclt`.
//!
//! Matrices cross the boundary as lists of rows; reports as JSON text.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use condclt::cli::{emit_report, execute, parse_config, ExperimentKind, OutputFormat, RunError};
use condclt::cwold::{self, CharFnExpr};
use condclt::limit_theory::{self, CovModel, TheoryCovariance};
use condclt::mc_engine::{self, Experiment, Model, RunOptions, Scaling};
use condclt::monotone;
use condclt::rng::replicate_rng;
use condclt::simulators;
use condclt::transfer;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn cov_model(name: &str) -> PyResult<CovModel> {
    match name {
        "alloc" => Ok(CovModel::Alloc),
        "gnp" => Ok(CovModel::Gnp),
        "gnm" => Ok(CovModel::Gnm),
        _ => Err(PyValueError::new_err(format!("unknown model {name:?}; expected alloc, gnp or gnm"))),
    }
}

/// Joint Gaussian `(X, Y)` with `X` of length `q` and `Y` of length `r`.
#[pyclass(name = "JointGaussian", frozen)]
struct PyJointGaussian {
    inner: condclt::JointGaussian,
}

#[pymethods]
impl PyJointGaussian {
    #[new]
    fn new(q: usize, r: usize, mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = condclt::JointGaussian::new(q, r, DVector::from_vec(mean), matrix(&cov)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Conditional mean and covariance of `X` given `Y = y`.
    fn condition(&self, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let c = condclt::condition_on_vector(&self.inner, &y).map_err(value_err)?;
        Ok((c.mean.iter().copied().collect(), rows(&c.cov)))
    }

    fn condition_scalar(&self, y: f64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let c = condclt::condition_on_scalar(&self.inner, y).map_err(value_err)?;
        Ok((c.mean.iter().copied().collect(), rows(&c.cov)))
    }

    fn cov(&self) -> Vec<Vec<f64>> {
        rows(self.inner.cov())
    }
}

#[pyfunction]
fn poisson_pmf(lam: f64, k: u64) -> PyResult<f64> {
    limit_theory::poisson_pmf(lam, k).map_err(value_err)
}

/// Limit covariance of the standardized counts `k = 0..=k_max`.
#[pyfunction]
fn theory_covariance(model: &str, lam: f64, k_max: usize) -> PyResult<Vec<Vec<f64>>> {
    let t = TheoryCovariance::build(cov_model(model)?, lam, k_max).map_err(value_err)?;
    Ok(rows(&t.matrix))
}

#[pyfunction]
fn weiss_variance(lam: f64) -> PyResult<f64> {
    limit_theory::weiss_variance(lam).map_err(value_err)
}

/// `(sx2, sxy, sy2, residual)` for the spacings exceedance count.
#[pyfunction]
fn spacings_constants(a: f64) -> PyResult<(f64, f64, f64, f64)> {
    let c = limit_theory::spacings_limit_constants(a).map_err(value_err)?;
    Ok((c.sx2, c.sxy, c.sy2, c.residual))
}

/// Largest entrywise gap between the conditioned `G(n,p)` limit and the
/// `G(n,m)` closed form.
#[pyfunction]
fn gnp_to_gnm_gap(lam: f64, k_max: usize) -> PyResult<f64> {
    Ok(transfer::gnp_to_gnm(lam, k_max).map_err(value_err)?.max_abs_diff)
}

#[pyfunction]
fn poissonized_to_alloc_gap(lam: f64, j_max: usize) -> PyResult<f64> {
    Ok(transfer::poissonized_to_alloc(lam, j_max).map_err(value_err)?.max_abs_diff)
}

/// Ball counts per box for replicate `index` of `seed`.
#[pyfunction]
#[pyo3(signature = (n, m, seed, index = 0))]
fn allocation_box_counts(n: usize, m: u64, seed: u64, index: u64) -> PyResult<Vec<u32>> {
    simulators::allocation_box_counts(n, m, &mut replicate_rng(seed, index)).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (n, p, seed, index = 0))]
fn gnp_degrees(n: usize, p: f64, seed: u64, index: u64) -> PyResult<Vec<u32>> {
    Ok(simulators::gnp_degrees(n, p, &mut replicate_rng(seed, index)).map_err(value_err)?.degrees)
}

#[pyfunction]
#[pyo3(signature = (n, m, seed, index = 0))]
fn gnm_degrees(n: usize, m: u64, seed: u64, index: u64) -> PyResult<Vec<u32>> {
    Ok(simulators::gnm_degrees(n, m, &mut replicate_rng(seed, index)).map_err(value_err)?.degrees)
}

#[pyfunction]
#[pyo3(signature = (n, seed, index = 0))]
fn spacings(n: usize, seed: u64, index: u64) -> PyResult<Vec<f64>> {
    Ok(simulators::sample_spacings(n, &mut replicate_rng(seed, index)).map_err(value_err)?.s)
}

fn model_from(name: &str, n: u64, m: Option<u64>, p: Option<f64>, a: Option<f64>) -> PyResult<Model> {
    let need = |v: Option<u64>| v.ok_or_else(|| PyValueError::new_err(format!("{name} needs m")));
    Ok(match name {
        "alloc" => Model::Alloc { n, m: need(m)? },
        "gnm" => Model::Gnm { n, m: need(m)? },
        "gnp" => Model::Gnp { n, p: p.ok_or_else(|| PyValueError::new_err("gnp needs p"))? },
        "spacings" => Model::Spacings { n, a: a.unwrap_or(1.0) },
        _ => return Err(PyValueError::new_err(format!("unknown model {name:?}"))),
    })
}

/// Sample mean and covariance of the standardized (or raw) counts.
#[pyfunction]
#[pyo3(signature = (model, n, reps, seed, max_k = 5, m = None, p = None, a = None, raw = false, workers = None))]
#[allow(clippy::too_many_arguments)]
fn sample_moments(
    py: Python<'_>,
    model: &str,
    n: u64,
    reps: u64,
    seed: u64,
    max_k: usize,
    m: Option<u64>,
    p: Option<f64>,
    a: Option<f64>,
    raw: bool,
    workers: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut exp = Experiment::new(model_from(model, n, m, p, a)?, max_k, reps, seed);
    if raw {
        exp.scaling = Scaling::Raw;
    }
    let run = py
        .detach(|| mc_engine::run_experiment(&exp, RunOptions { workers, retain_counts: false }))
        .map_err(value_err)?;
    let pooled = run.acc.pooled();
    Ok((pooled.mean.iter().copied().collect(), rows(&pooled.covariance())))
}

/// Runs one `condclt` experiment and returns its JSON report. Keys and
/// values are the command-line ones, e.g. `{"n": 2000, "m": 2000}`.
#[pyfunction]
#[pyo3(signature = (experiment, options = None))]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    options: Option<std::collections::BTreeMap<String, Bound<'_, PyAny>>>,
) -> PyResult<String> {
    let kind = ExperimentKind::ALL
        .into_iter()
        .find(|k| k.name() == experiment)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment {experiment:?}")))?;
    let mut flags = Vec::new();
    for (k, v) in options.unwrap_or_default() {
        flags.push((k, v.str()?.to_string()));
    }
    let cfg = parse_config(kind, &[], &flags, None).map_err(value_err)?;
    let report = py.detach(|| execute(&cfg)).map_err(|e| match e {
        RunError::Config(c) => value_err(c),
        other => PyRuntimeError::new_err(other.to_string()),
    })?;
    let mut out = Vec::new();
    emit_report(&report, OutputFormat::Structured, &mut out).map_err(value_err)?;
    String::from_utf8(out).map_err(value_err)
}

/// Exact law of the number of empty boxes as `(value, probability)` pairs.
#[pyfunction]
fn empty_box_law(n: usize, m: usize) -> PyResult<Vec<(f64, f64)>> {
    let law = monotone::exact_empty_box_law(n, m).map_err(value_err)?.to_finite();
    Ok(law.support().iter().copied().zip(law.probs().iter().copied()).collect())
}

/// `(pairs checked, failures)` of the exact monotonicity suite.
#[pyfunction]
#[pyo3(signature = (n_max = 5, m_max = 8, graph_n = 4))]
fn monotonicity_suite(n_max: usize, m_max: usize, graph_n: usize) -> PyResult<(usize, Vec<String>)> {
    let s = monotone::monotonicity_suite(n_max, m_max, graph_n).map_err(value_err)?;
    let failures = s.dominance_failures.into_iter().chain(s.coupling_failures).collect();
    Ok((s.pairs_checked, failures))
}

/// `|phi_X(t1, t2) - phi_Y(t1, t2)|` for the canonical pair.
#[pyfunction]
fn cf_difference(t1: f64, t2: f64) -> PyResult<f64> {
    cwold::cf_difference_at(&CharFnExpr::canonical_x(), &CharFnExpr::canonical_y(), t1, t2).map_err(value_err)
}

/// Largest difference on the octant grid and the off-octant witness.
#[pyfunction]
#[pyo3(signature = (grid = cwold::DEFAULT_GRID_STEP, extent = cwold::DEFAULT_EXTENT))]
fn cwold_scan(grid: f64, extent: f64) -> PyResult<(f64, f64, (f64, f64))> {
    let (x, y) = (CharFnExpr::canonical_x(), CharFnExpr::canonical_y());
    let octant = cwold::octant_equality_scan(&x, &y, grid, extent).map_err(value_err)?;
    let witness = cwold::counterexample_witness(&x, &y, grid, extent).map_err(value_err)?;
    Ok((octant.max_diff, witness.max_diff, witness.argmax))
}

#[pymodule]
fn pycondclt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJointGaussian>()?;
    m.add_function(wrap_pyfunction!(poisson_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(theory_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(weiss_variance, m)?)?;
    m.add_function(wrap_pyfunction!(spacings_constants, m)?)?;
    m.add_function(wrap_pyfunction!(gnp_to_gnm_gap, m)?)?;
    m.add_function(wrap_pyfunction!(poissonized_to_alloc_gap, m)?)?;
    m.add_function(wrap_pyfunction!(allocation_box_counts, m)?)?;
    m.add_function(wrap_pyfunction!(gnp_degrees, m)?)?;
    m.add_function(wrap_pyfunction!(gnm_degrees, m)?)?;
    m.add_function(wrap_pyfunction!(spacings, m)?)?;
    m.add_function(wrap_pyfunction!(sample_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(empty_box_law, m)?)?;
    m.add_function(wrap_pyfunction!(monotonicity_suite, m)?)?;
    m.add_function(wrap_pyfunction!(cf_difference, m)?)?;
    m.add_function(wrap_pyfunction!(cwold_scan, m)?)?;
    Ok(())
}
