use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{BatchedAccumulator, McError};

pub const DEFAULT_Z_GATE: f64 = 4.0;
pub const DEFAULT_KS_GATE: f64 = 0.05;

/// Smallest sample accepted by the comparisons.
const MIN_REPLICATES: u64 = 100;
const MIN_KS_SAMPLES: usize = 1000;

/// JSON has no infinities; non-finite values are written as strings.
mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    /// Mean of coordinate `i`.
    Mean,
    /// Covariance of coordinates `i` and `j`.
    Cov,
    /// Deterministic check; `stderr` holds the tolerance.
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub kind: EntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(with = "float_repr")]
    pub theory: f64,
    #[serde(with = "float_repr")]
    pub estimate: f64,
    #[serde(with = "float_repr")]
    pub stderr: f64,
    #[serde(with = "float_repr")]
    pub z: f64,
    pub gate: f64,
}

fn z_score(estimate: f64, theory: f64, se: f64) -> f64 {
    let diff = estimate - theory;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

impl ReportEntry {
    pub fn statistical(kind: EntryKind, i: usize, j: Option<usize>, theory: f64, estimate: f64, se: f64, gate: f64) -> Self {
        Self { kind, i: Some(i), j, name: None, theory, estimate, stderr: se, z: z_score(estimate, theory, se), gate }
    }

    /// Passes when `|estimate - theory| <= tolerance`.
    pub fn check(name: &str, theory: f64, estimate: f64, tolerance: f64) -> Self {
        let z = z_score(estimate, theory, tolerance);
        Self { kind: EntryKind::Check, i: None, j: None, name: Some(name.to_string()), theory, estimate, stderr: tolerance, z, gate: 1.0 }
    }

    /// Passes when `estimate >= bound`; z is positive when the bound is missed.
    pub fn lower_bound(name: &str, bound: f64, estimate: f64) -> Self {
        let z = if estimate >= bound { 0.0 } else { f64::INFINITY };
        Self { kind: EntryKind::Check, i: None, j: None, name: Some(name.to_string()), theory: bound, estimate, stderr: 0.0, z, gate: 1.0 }
    }

    /// Passes when `estimate < bound`.
    pub fn upper_bound(name: &str, bound: f64, estimate: f64) -> Self {
        let z = if estimate < bound { 0.0 } else { f64::INFINITY };
        Self { kind: EntryKind::Check, i: None, j: None, name: Some(name.to_string()), theory: bound, estimate, stderr: 0.0, z, gate: 1.0 }
    }

    pub fn passed(&self) -> bool {
        self.z.abs() <= self.gate
    }

    /// `(entry_i, entry_j)` columns of the flat table.
    pub fn labels(&self) -> (String, String) {
        let show = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        match self.kind {
            EntryKind::Mean => (show(self.i), "mean".into()),
            EntryKind::Cov => (show(self.i), show(self.j)),
            EntryKind::Check => (self.name.clone().unwrap_or_default(), String::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityEntry {
    pub coordinate: usize,
    #[serde(with = "float_repr")]
    pub mu: f64,
    #[serde(with = "float_repr")]
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_step: Option<f64>,
    #[serde(with = "float_repr")]
    pub distance: f64,
    pub gate: f64,
}

impl NormalityEntry {
    pub fn passed(&self) -> bool {
        self.distance <= self.gate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub entries: Vec<ReportEntry>,
    pub normality: Vec<NormalityEntry>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl VerificationReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            parameters: BTreeMap::new(),
            metadata: BTreeMap::new(),
            entries: Vec::new(),
            normality: Vec::new(),
            pass: true,
            wall_time_s: 0.0,
        }
    }

    pub fn update_pass(&mut self) {
        self.pass = self.entries.iter().all(ReportEntry::passed) && self.normality.iter().all(NormalityEntry::passed);
    }

    pub fn max_abs_z(&self) -> f64 {
        self.entries.iter().filter(|e| e.kind != EntryKind::Check).map(|e| e.z.abs()).fold(0.0, f64::max)
    }

    pub fn entry(&self, kind: EntryKind, i: usize, j: Option<usize>) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.kind == kind && e.i == Some(i) && e.j == j)
    }

    pub fn check(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name.as_deref() == Some(name))
    }
}

fn check_shapes(acc: &BatchedAccumulator, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<(), McError> {
    let d = acc.dim();
    if mean.len() != d {
        return Err(McError::DimensionMismatch { expected: d, found: mean.len() });
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(McError::DimensionMismatch { expected: d, found: cov.nrows() });
    }
    if acc.count() < MIN_REPLICATES {
        return Err(McError::InsufficientReplicates { count: acc.count(), required: MIN_REPLICATES });
    }
    Ok(())
}

/// Gates every mean and every upper-triangle covariance entry against the
/// theory. Means use `sqrt(var / R)`, covariances the batch-means error.
pub fn compare_to_theory(
    acc: &BatchedAccumulator,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    z_gate: f64,
) -> Result<VerificationReport, McError> {
    check_shapes(acc, mean, cov)?;
    let pooled = acc.pooled();
    let est = pooled.covariance();
    let cov_se = acc.covariance_se()?;
    let r = pooled.count as f64;
    let d = acc.dim();
    let mut report = VerificationReport::new("comparison", 0);
    for i in 0..d {
        let se = (est[(i, i)].max(0.0) / r).sqrt();
        report.entries.push(ReportEntry::statistical(EntryKind::Mean, i, None, mean[i], pooled.mean[i], se, z_gate));
    }
    for i in 0..d {
        for j in i..d {
            report.entries.push(ReportEntry::statistical(EntryKind::Cov, i, Some(j), cov[(i, j)], est[(i, j)], cov_se[(i, j)], z_gate));
        }
    }
    report.update_pass();
    Ok(report)
}

/// Means (order 1) and variances (order 2) against their limits.
pub fn moment_convergence_check(
    acc: &BatchedAccumulator,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    max_order: u32,
    z_gate: f64,
) -> Result<Vec<ReportEntry>, McError> {
    if !(1..=2).contains(&max_order) {
        return Err(McError::InvalidParameter(format!("moment order {max_order} outside 1..=2")));
    }
    let full = compare_to_theory(acc, mean, cov, z_gate)?;
    Ok(full
        .entries
        .into_iter()
        .filter(|e| match e.kind {
            EntryKind::Mean => true,
            EntryKind::Cov => max_order == 2 && e.i == e.j,
            EntryKind::Check => false,
        })
        .collect())
}

/// Sup distance between the empirical CDF of `samples` and the CDF of
/// `N(mu, sigma2)`, evaluated on both sides of every jump.
pub fn normality_distance(samples: &[f64], mu: f64, sigma2: f64) -> Result<f64, McError> {
    sup_distance(samples, mu, sigma2, 0.0)
}

/// As [`normality_distance`] for samples on a lattice of spacing `step`:
/// the empirical CDF just below and at each atom `x` is compared with the
/// Gaussian CDF at `x - step/2` and `x + step/2`, i.e. against the Gaussian
/// rounded to the lattice.
pub fn lattice_normality_distance(samples: &[f64], mu: f64, sigma2: f64, step: f64) -> Result<f64, McError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(McError::InvalidParameter(format!("lattice step {step}")));
    }
    sup_distance(samples, mu, sigma2, step)
}

fn sup_distance(samples: &[f64], mu: f64, sigma2: f64, step: f64) -> Result<f64, McError> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(McError::DegenerateVariance(format!("sigma2 = {sigma2}")));
    }
    if samples.len() < MIN_KS_SAMPLES {
        return Err(McError::InsufficientReplicates { count: samples.len() as u64, required: MIN_KS_SAMPLES as u64 });
    }
    let normal = Normal::new(mu, sigma2.sqrt()).map_err(|e| McError::DegenerateVariance(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let half = step / 2.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut k = i;
        while k + 1 < xs.len() && xs[k + 1] == xs[i] {
            k += 1;
        }
        let below = normal.cdf(xs[i] - half);
        let at = normal.cdf(xs[i] + half);
        d = d.max((below - i as f64 / n).abs()).max(((k + 1) as f64 / n - at).abs());
        i = k + 1;
    }
    Ok(d)
}

/// Distance entry; `lattice_step` selects the lattice-rounded comparison.
pub fn normality_entry(
    samples: &[f64],
    coordinate: usize,
    mu: f64,
    sigma2: f64,
    lattice_step: Option<f64>,
    gate: f64,
) -> Result<NormalityEntry, McError> {
    let distance = match lattice_step {
        Some(h) => lattice_normality_distance(samples, mu, sigma2, h)?,
        None => normality_distance(samples, mu, sigma2)?,
    };
    Ok(NormalityEntry { coordinate, mu, sigma2, lattice_step, distance, gate })
}
