//! Characteristic-function bench for the one-sided Cramér–Wold question.
//!
//! With `U, V, W` having cfs `(1-|t|)+`, `(1-|t|)+` and the period-2
//! triangle wave, the pairs `X = (U+V, U-V)` and `Y = (U+W, U-W)` have equal
//! cfs on the closed first quadrant but different laws. Everything here is
//! closed-form evaluation; these laws have no finite mean, so sampling would
//! be of little use.

use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_GRID_STEP: f64 = 0.015;
pub const DEFAULT_EXTENT: f64 = 3.0;
/// Differences below this count as no difference.
pub const INDISTINGUISHABLE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CwoldError {
    #[error("expression takes {expected} argument(s), got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("no difference above {threshold:e} found (max {max:e})")]
    NoDifferenceFound { max: f64, threshold: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("table output: {0}")]
    Io(String),
}

/// Real, even univariate characteristic functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Univariate {
    /// `max(0, 1 - |t|)`, the cf of the density `(1 - cos x) / (pi x^2)`.
    Triangular,
    /// Period-2 extension of the triangular cf on `[-1, 1]`, the cf of the
    /// lattice law on `{0} ∪ {±(2k+1)pi}`.
    PeriodicTriangular,
    /// `phi(t / s)`, the cf of `s` times the base variable.
    Scaled(Box<Univariate>, f64),
}

impl Univariate {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Univariate::Triangular => (1.0 - t.abs()).max(0.0),
            Univariate::PeriodicTriangular => 1.0 - periodic_reduce(t).abs(),
            Univariate::Scaled(base, s) => base.eval(t / s),
        }
    }

    /// Whether `E exp(a|X|)` is finite for some `a > 0`. Neither base law
    /// has a finite mean, so this is false throughout.
    pub fn has_exponential_moment(&self) -> bool {
        match self {
            Univariate::Triangular | Univariate::PeriodicTriangular => false,
            Univariate::Scaled(base, _) => base.has_exponential_moment(),
        }
    }
}

/// `t - 2 round(t / 2)`, in `[-1, 1]`.
pub fn periodic_reduce(t: f64) -> f64 {
    t - 2.0 * (t / 2.0).round()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CharFnExpr {
    Uni(Univariate),
    /// `(t1, t2) -> phi_u(t1 + t2) * phi_v(t1 - t2)`, the cf of `(U+V, U-V)`.
    Pair { u: Univariate, v: Univariate },
}

impl CharFnExpr {
    pub fn arity(&self) -> usize {
        match self {
            CharFnExpr::Uni(_) => 1,
            CharFnExpr::Pair { .. } => 2,
        }
    }

    /// The `X` pair: both components triangular.
    pub fn canonical_x() -> Self {
        CharFnExpr::Pair { u: Univariate::Triangular, v: Univariate::Triangular }
    }

    /// The `Y` pair: `W` periodic.
    pub fn canonical_y() -> Self {
        CharFnExpr::Pair { u: Univariate::Triangular, v: Univariate::PeriodicTriangular }
    }

    fn eval2(&self, t1: f64, t2: f64) -> f64 {
        match self {
            CharFnExpr::Pair { u, v } => u.eval(t1 + t2) * v.eval(t1 - t2),
            CharFnExpr::Uni(_) => unreachable!("arity checked by callers"),
        }
    }
}

pub fn eval_cf(expr: &CharFnExpr, t: &[f64]) -> Result<f64, CwoldError> {
    if t.len() != expr.arity() {
        return Err(CwoldError::ArityMismatch { expected: expr.arity(), found: t.len() });
    }
    Ok(match expr {
        CharFnExpr::Uni(u) => u.eval(t[0]),
        pair => pair.eval2(t[0], t[1]),
    })
}

fn require_pairs(x: &CharFnExpr, y: &CharFnExpr) -> Result<(), CwoldError> {
    for e in [x, y] {
        if e.arity() != 2 {
            return Err(CwoldError::ArityMismatch { expected: 2, found: e.arity() });
        }
    }
    Ok(())
}

/// `|phi_X(t) - phi_Y(t)|` at a single point.
pub fn cf_difference_at(x: &CharFnExpr, y: &CharFnExpr, t1: f64, t2: f64) -> Result<f64, CwoldError> {
    require_pairs(x, y)?;
    Ok((x.eval2(t1, t2) - y.eval2(t1, t2)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub max_diff: f64,
    pub argmax: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t1: f64,
    pub t2: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `[0, T]^2`.
    Octant,
    /// `[-T, T]^2` without the closed first quadrant.
    Complement,
}

fn grid_steps(h: f64, extent: f64) -> Result<i64, CwoldError> {
    if !(h > 0.0 && extent > 0.0 && h.is_finite() && extent.is_finite()) {
        return Err(CwoldError::InvalidGrid(format!("step {h}, extent {extent}")));
    }
    let n = (extent / h).round();
    if n > 1e5 {
        return Err(CwoldError::InvalidGrid(format!("{n} steps per axis")));
    }
    Ok(n as i64)
}

/// Grid rows in row-major order: `t1` outer, `t2` inner.
pub fn scan_rows(x: &CharFnExpr, y: &CharFnExpr, h: f64, extent: f64, region: Region) -> Result<Vec<ScanRow>, CwoldError> {
    require_pairs(x, y)?;
    let n = grid_steps(h, extent)?;
    let range: RangeInclusive<i64> = match region {
        Region::Octant => 0..=n,
        Region::Complement => -n..=n,
    };
    let mut rows = Vec::new();
    for i in range.clone() {
        for j in range.clone() {
            if region == Region::Complement && i >= 0 && j >= 0 {
                continue;
            }
            let (t1, t2) = (i as f64 * h, j as f64 * h);
            let (phi_x, phi_y) = (x.eval2(t1, t2), y.eval2(t1, t2));
            rows.push(ScanRow { t1, t2, phi_x, phi_y, diff: (phi_x - phi_y).abs() });
        }
    }
    Ok(rows)
}

fn reduce(rows: &[ScanRow]) -> ScanResult {
    let mut best = ScanResult { max_diff: 0.0, argmax: (rows[0].t1, rows[0].t2), points: rows.len() };
    let norm = |t: (f64, f64)| t.0 * t.0 + t.1 * t.1;
    for r in rows {
        let closer = r.diff == best.max_diff && norm((r.t1, r.t2)) < norm(best.argmax);
        if r.diff > best.max_diff || closer {
            best.max_diff = r.diff;
            best.argmax = (r.t1, r.t2);
        }
    }
    best
}

/// Largest cf difference over the grid on `[0, T]^2`.
pub fn octant_equality_scan(x: &CharFnExpr, y: &CharFnExpr, h: f64, extent: f64) -> Result<ScanResult, CwoldError> {
    Ok(reduce(&scan_rows(x, y, h, extent, Region::Octant)?))
}

/// Point of largest cf difference off the first quadrant. Ties go to the
/// point nearest the origin, then to the first in row-major order.
pub fn counterexample_witness(x: &CharFnExpr, y: &CharFnExpr, h: f64, extent: f64) -> Result<ScanResult, CwoldError> {
    let best = reduce(&scan_rows(x, y, h, extent, Region::Complement)?);
    if best.max_diff < INDISTINGUISHABLE {
        return Err(CwoldError::NoDifferenceFound { max: best.max_diff, threshold: INDISTINGUISHABLE });
    }
    Ok(best)
}

/// Largest `|phi_X(s c) - phi_Y(s c)|` for `s` on a grid of step `ds` over
/// `s_range`.
pub fn marginal_difference_along(
    x: &CharFnExpr,
    y: &CharFnExpr,
    direction: (f64, f64),
    s_range: (f64, f64),
    ds: f64,
) -> Result<f64, CwoldError> {
    require_pairs(x, y)?;
    if direction == (0.0, 0.0) {
        return Err(CwoldError::InvalidGrid("zero direction".into()));
    }
    if !(ds > 0.0) || s_range.0 > s_range.1 {
        return Err(CwoldError::InvalidGrid(format!("s in [{}, {}] step {ds}", s_range.0, s_range.1)));
    }
    let lo = (s_range.0 / ds).round() as i64;
    let hi = (s_range.1 / ds).round() as i64;
    Ok((lo..=hi)
        .map(|i| {
            let s = i as f64 * ds;
            (x.eval2(s * direction.0, s * direction.1) - y.eval2(s * direction.0, s * direction.1)).abs()
        })
        .fold(0.0, f64::max))
}

pub fn write_scan_table<W: Write>(rows: &[ScanRow], w: W) -> Result<(), CwoldError> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CwoldError::Io(e.to_string());
    out.write_record(["t1", "t2", "phi_x", "phi_y", "diff"]).map_err(io)?;
    for r in rows {
        out.serialize((r.t1, r.t2, r.phi_x, r.phi_y, r.diff)).map_err(io)?;
    }
    out.flush().map_err(|e| CwoldError::Io(e.to_string()))
}

/// `P(±(2k+1) pi)` for the lattice law whose cf is the triangle wave; the
/// atom at 0 carries 1/2.
pub fn lattice_atom(k: u64) -> f64 {
    let o = (2 * k + 1) as f64;
    2.0 / (std::f64::consts::PI.powi(2) * o * o)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeMassCheck {
    pub k_max: u64,
    pub truncated_sum: f64,
    /// Euler–Maclaurin estimate of the omitted mass.
    pub tail_estimate: f64,
    /// `4 / (pi^2 * 2 (2K+1))`, an upper bound on the omitted mass.
    pub tail_bound: f64,
    pub min_atom: f64,
}

impl LatticeMassCheck {
    pub fn total(&self) -> f64 {
        self.truncated_sum + self.tail_estimate
    }
}

/// Sums the lattice law's atoms up to `k_max`, smallest first.
pub fn lattice_mass_check(k_max: u64) -> LatticeMassCheck {
    let mut sum = 0.0;
    let mut min_atom = f64::INFINITY;
    for k in (0..=k_max).rev() {
        let p = lattice_atom(k);
        min_atom = min_atom.min(p);
        sum += 2.0 * p;
    }
    let pi2 = std::f64::consts::PI.powi(2);
    let a = (k_max + 1) as f64;
    let o = 2.0 * a + 1.0;
    // sum_{k > K} 1/(2k+1)^2 by Euler–Maclaurin from k = K+1
    let s = 1.0 / (2.0 * o) + 1.0 / (2.0 * o * o) + 4.0 / (12.0 * o.powi(3));
    LatticeMassCheck {
        k_max,
        truncated_sum: 0.5 + sum,
        tail_estimate: 4.0 / pi2 * s,
        tail_bound: 4.0 / pi2 / (2.0 * (2 * k_max + 1) as f64),
        min_atom,
    }
}

/// The lattice law's cf from its atoms, truncated at `k_max`.
pub fn lattice_cf_series(t: f64, k_max: u64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut s = 0.0;
    for k in (0..=k_max).rev() {
        let o = (2 * k + 1) as f64;
        s += 2.0 * lattice_atom(k) * (o * pi * t).cos();
    }
    0.5 + s
}
