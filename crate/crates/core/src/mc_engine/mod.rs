//! Replicated Monte Carlo harness.
//!
//! Every replicate draws from its own ChaCha stream keyed by `(seed, index)`.
//! Replicates are grouped into fixed work units that do not depend on the
//! worker count, and unit accumulators are merged in index order, so the
//! output is bit-identical for any number of threads.

mod accumulator;
mod report;

pub use accumulator::{BatchedAccumulator, MomentAccumulator, BATCHES};
pub use report::{
    compare_to_theory, moment_convergence_check, lattice_normality_distance, normality_distance, normality_entry, EntryKind, NormalityEntry,
    ReportEntry, VerificationReport, DEFAULT_KS_GATE, DEFAULT_Z_GATE,
};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limit_theory::{poisson_pmf, spacings_limit_constants, CovModel, LimitError, TheoryCovariance};
use crate::rng::replicate_rng;
use crate::simulators::{
    allocation_box_counts, exceedance_count, gnm_degrees, gnp_degrees, sample_spacings, CountProfile, CountTable,
    SimError,
};

#[derive(Debug, Error)]
pub enum McError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{count} replicates available, at least {required} required")]
    InsufficientReplicates { count: u64, required: u64 },
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("invalid standardization: {0}")]
    InvalidStandardization(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Scaling sequences: the statistic is standardized as `(x - b_n) / a_n`
/// and the conditioning variable as `(y - d_n) / c_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationSpec {
    pub a_n: f64,
    pub b_n: Vec<f64>,
    pub c_n: f64,
    pub d_n: f64,
    pub y_n: f64,
    pub xi: f64,
}

impl StandardizationSpec {
    pub fn identity(dim: usize) -> Self {
        Self { a_n: 1.0, b_n: vec![0.0; dim], c_n: 1.0, d_n: 0.0, y_n: 0.0, xi: 0.0 }
    }

    pub fn validate(&self) -> Result<(), McError> {
        if !(self.a_n > 0.0 && self.a_n.is_finite()) || !(self.c_n > 0.0 && self.c_n.is_finite()) {
            return Err(McError::InvalidStandardization(format!("a_n = {}, c_n = {}", self.a_n, self.c_n)));
        }
        let xi = (self.y_n - self.d_n) / self.c_n;
        if (xi - self.xi).abs() > 1e-12 * (1.0 + xi.abs()) {
            return Err(McError::InvalidStandardization(format!("xi = {} but (y_n - d_n)/c_n = {xi}", self.xi)));
        }
        Ok(())
    }
}

pub fn standardize(x: &[f64], spec: &StandardizationSpec) -> Result<Vec<f64>, McError> {
    spec.validate()?;
    if x.len() != spec.b_n.len() {
        return Err(McError::DimensionMismatch { expected: spec.b_n.len(), found: x.len() });
    }
    Ok(x.iter().zip(&spec.b_n).map(|(x, b)| (x - b) / spec.a_n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Alloc { n: u64, m: u64 },
    Gnp { n: u64, p: f64 },
    Gnm { n: u64, m: u64 },
    Spacings { n: u64, a: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Alloc { .. } => "alloc",
            Model::Gnp { .. } => "gnp",
            Model::Gnm { .. } => "gnm",
            Model::Spacings { .. } => "spacings",
        }
    }

    pub fn n(&self) -> u64 {
        match *self {
            Model::Alloc { n, .. } | Model::Gnp { n, .. } | Model::Gnm { n, .. } | Model::Spacings { n, .. } => n,
        }
    }

    /// Finite-`n` intensity used for centering: `m/n` for allocations,
    /// `2m/n` for `G(n,m)`, `np` for `G(n,p)`.
    pub fn lambda_n(&self) -> Option<f64> {
        match *self {
            Model::Alloc { n, m } => Some(m as f64 / n as f64),
            Model::Gnm { n, m } => Some(2.0 * m as f64 / n as f64),
            Model::Gnp { n, p } => Some(n as f64 * p),
            Model::Spacings { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `a_n = sqrt(n)`, `b_n` the finite-`n` Poisson centering.
    Limit,
    /// Raw counts (`a_n = 1`, `b_n = 0`).
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub model: Model,
    pub max_k: usize,
    pub replicates: u64,
    pub seed: u64,
    pub scaling: Scaling,
}

impl Experiment {
    pub fn new(model: Model, max_k: usize, replicates: u64, seed: u64) -> Self {
        Self { model, max_k, replicates, seed, scaling: Scaling::Limit }
    }

    /// Length of the statistic vector.
    pub fn dim(&self) -> usize {
        match self.model {
            Model::Spacings { .. } => 1,
            _ => self.max_k + 1,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.replicates < 2 {
            return Err(McError::InvalidParameter(format!("replicates = {} must be at least 2", self.replicates)));
        }
        let bad = |s: String| Err(McError::InvalidParameter(s));
        match self.model {
            Model::Gnp { p, .. } if !(0.0..=1.0).contains(&p) => bad(format!("p = {p} must lie in [0, 1]")),
            Model::Spacings { a, .. } if !(a > 0.0 && a.is_finite()) => bad(format!("a = {a} must be positive")),
            m if m.n() == 0 => bad("n must be at least 1".into()),
            _ => Ok(()),
        }
    }

    pub fn standardization(&self) -> Result<StandardizationSpec, McError> {
        if self.scaling == Scaling::Raw {
            return Ok(StandardizationSpec::identity(self.dim()));
        }
        let n = self.model.n() as f64;
        let root = n.sqrt();
        let (b_n, d_n) = match self.model {
            Model::Spacings { a, .. } => (vec![n * (-a).exp()], n),
            model => {
                let lam = model.lambda_n().expect("count model");
                let b = (0..=self.max_k).map(|k| Ok(n * poisson_pmf(lam, k as u64)?)).collect::<Result<_, McError>>()?;
                // y is the ball or edge count, centered at its conditioning value
                let d = match model {
                    Model::Alloc { m, .. } | Model::Gnm { m, .. } => m as f64,
                    _ => lam * n / 2.0,
                };
                (b, d)
            }
        };
        Ok(StandardizationSpec { a_n: root, b_n, c_n: root, d_n, y_n: d_n, xi: 0.0 })
    }

    /// Limit mean and covariance of the standardized statistic.
    pub fn theory(&self) -> Result<(DVector<f64>, DMatrix<f64>), McError> {
        let d = self.dim();
        let cov = match self.model {
            Model::Alloc { .. } => TheoryCovariance::build(CovModel::Alloc, self.model.lambda_n().unwrap(), self.max_k)?.matrix,
            Model::Gnm { .. } => TheoryCovariance::build(CovModel::Gnm, self.model.lambda_n().unwrap(), self.max_k)?.matrix,
            Model::Gnp { .. } => TheoryCovariance::build(CovModel::Gnp, self.model.lambda_n().unwrap(), self.max_k)?.matrix,
            Model::Spacings { a, .. } => DMatrix::from_element(1, 1, spacings_limit_constants(a)?.residual),
        };
        Ok((DVector::zeros(d), cov))
    }

    /// Raw statistic of one replicate.
    pub fn sample_counts(&self, index: u64) -> Result<Vec<u64>, McError> {
        let mut rng = replicate_rng(self.seed, index);
        let k = self.max_k;
        let counts = match self.model {
            Model::Alloc { n, m } => {
                CountProfile::from_cell_counts(&allocation_box_counts(n as usize, m, &mut rng)?, k).counts
            }
            Model::Gnp { n, p } => CountProfile::from_cell_counts(&gnp_degrees(n as usize, p, &mut rng)?.degrees, k).counts,
            Model::Gnm { n, m } => CountProfile::from_cell_counts(&gnm_degrees(n as usize, m, &mut rng)?.degrees, k).counts,
            Model::Spacings { n, a } => vec![exceedance_count(&sample_spacings(n as usize, &mut rng)?, a)?],
        };
        Ok(counts)
    }
}

/// Accumulated moments plus, optionally, the raw per-replicate counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub experiment: Experiment,
    pub spec: StandardizationSpec,
    pub acc: BatchedAccumulator,
    pub counts: Option<CountTable>,
}

impl ExperimentRun {
    /// Standardized values of coordinate `i` for every replicate, in
    /// replicate order. Needs retained counts.
    pub fn standardized_column(&self, i: usize) -> Option<Vec<f64>> {
        let table = self.counts.as_ref()?;
        Some((0..table.rows()).map(|r| (table.row(r)[i] as f64 - self.spec.b_n[i]) / self.spec.a_n).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub retain_counts: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: None, retain_counts: false }
    }
}

const UNIT_SIZE: u64 = 64;

struct UnitResult {
    batch: usize,
    acc: MomentAccumulator,
    counts: Option<CountTable>,
}

fn run_unit(exp: &Experiment, spec: &StandardizationSpec, batch: usize, range: (u64, u64), retain: bool) -> Result<UnitResult, McError> {
    let dim = exp.dim();
    let mut acc = MomentAccumulator::new(dim);
    let mut counts = retain.then(|| CountTable::new(dim));
    let mut z = vec![0.0; dim];
    for index in range.0..range.1 {
        let raw = exp.sample_counts(index)?;
        for (i, c) in raw.iter().enumerate() {
            z[i] = (*c as f64 - spec.b_n[i]) / spec.a_n;
        }
        acc.push(&z)?;
        if let Some(t) = counts.as_mut() {
            t.push_row(&raw);
        }
    }
    Ok(UnitResult { batch, acc, counts })
}

/// Runs `exp.replicates` independent replicates and returns per-batch
/// moments of the standardized statistic.
pub fn run_experiment(exp: &Experiment, options: RunOptions) -> Result<ExperimentRun, McError> {
    exp.validate()?;
    let spec = exp.standardization()?;
    spec.validate()?;
    let total = exp.replicates;
    let mut units = Vec::new();
    for b in 0..BATCHES as u64 {
        let lo = (b as u128 * total as u128 / BATCHES as u128) as u64;
        let hi = ((b + 1) as u128 * total as u128 / BATCHES as u128) as u64;
        let mut s = lo;
        while s < hi {
            let e = (s + UNIT_SIZE).min(hi);
            units.push((b as usize, (s, e)));
            s = e;
        }
    }
    let work = || -> Vec<Result<UnitResult, McError>> {
        units.par_iter().map(|&(b, r)| run_unit(exp, &spec, b, r, options.retain_counts)).collect()
    };
    let results = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| McError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut acc = BatchedAccumulator::new(exp.dim());
    let mut counts = options.retain_counts.then(|| CountTable::new(exp.dim()));
    for r in results {
        let r = r?;
        acc.batches[r.batch].merge(&r.acc)?;
        if let (Some(all), Some(part)) = (counts.as_mut(), r.counts.as_ref()) {
            all.append(part);
        }
    }
    Ok(ExperimentRun { experiment: exp.clone(), spec, acc, counts })
}
