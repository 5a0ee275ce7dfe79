//! Closed-form limit means, variances and covariances.
//!
//! All three count models share the Poisson weights `pi(k) = lambda^k e^{-lambda} / k!`:
//!
//! * allocations (`m` balls in `n` boxes, `lambda = m/n`), boxes with exactly `j` balls;
//! * `G(n,p)` with `lambda = n p`, vertices of degree `k`;
//! * `G(n,m)` with `lambda = 2m/n`, vertices of degree `k`.
//!
//! Infinite families (sums over all `k >= 0`) are truncated at an index `K`
//! whose Poisson tail mass is below [`TAIL_MASS_GATE`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};
use thiserror::Error;

use crate::gauss_cond::{residual_variance, GaussError};

/// Poisson tail mass allowed beyond a truncation index.
pub const TAIL_MASS_GATE: f64 = 1e-12;
/// Largest tolerated estimated tail contribution in [`lincomb_variance`].
pub const LINCOMB_TAIL_GATE: f64 = 1e-9;

const LOG_SPACE_FROM: u64 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("a must be positive and finite, got {0}")]
    InvalidA(f64),
    #[error("truncation at K = {k} leaves tail {tail:e} above the gate {gate:e}")]
    Truncation { k: usize, tail: f64, gate: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

fn check_lambda(lambda: f64) -> Result<(), LimitError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(LimitError::InvalidLambda(lambda))
    }
}

/// `P(Po(lambda) = k)`; switches to log space for `k > 30`.
pub fn poisson_pmf(lambda: f64, k: u64) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    Ok(pmf_unchecked(lambda, k))
}

fn pmf_unchecked(lambda: f64, k: u64) -> f64 {
    if k <= LOG_SPACE_FROM && lambda < 700.0 {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        p
    } else {
        (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
    }
}

/// `sum_{k > K} P(Po(lambda) = k)`, summed forward from `K + 1`.
pub fn tail_mass(lambda: f64, k_max: usize) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    let mut sum = 0.0;
    let mut k = k_max as u64 + 1;
    loop {
        let term = pmf_unchecked(lambda, k);
        sum += term;
        if (k as f64) > lambda && (term == 0.0 || term < 1e-18 * sum) {
            break;
        }
        k += 1;
    }
    Ok(sum)
}

/// Smallest `K` whose tail mass is below [`TAIL_MASS_GATE`].
pub fn truncation_index(lambda: f64) -> Result<usize, LimitError> {
    check_lambda(lambda)?;
    let mut k = lambda.floor() as usize;
    while tail_mass(lambda, k)? >= TAIL_MASS_GATE {
        k += 1;
    }
    Ok(k)
}

/// A Poisson mean together with a truncation index that passes the tail gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub lambda: f64,
    pub k_max: usize,
}

impl PoissonParams {
    /// Picks the smallest admissible truncation index.
    pub fn new(lambda: f64) -> Result<Self, LimitError> {
        Ok(Self { lambda, k_max: truncation_index(lambda)? })
    }

    pub fn with_truncation(lambda: f64, k_max: usize) -> Result<Self, LimitError> {
        let tail = tail_mass(lambda, k_max)?;
        if tail >= TAIL_MASS_GATE {
            return Err(LimitError::Truncation { k: k_max, tail, gate: TAIL_MASS_GATE });
        }
        Ok(Self { lambda, k_max })
    }

    pub fn pmf(&self, k: u64) -> f64 {
        pmf_unchecked(self.lambda, k)
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Limit covariance of the standardized counts of boxes with exactly `i`
/// and `j` balls: `delta_ij pi(i) - pi(i) pi(j) (1 + (i - lambda)(j - lambda)/lambda)`.
pub fn alloc_cov(lambda: f64, i: usize, j: usize) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    let (pi, pj) = (pmf_unchecked(lambda, i as u64), pmf_unchecked(lambda, j as u64));
    let c = (i as f64 - lambda) * (j as f64 - lambda) / lambda;
    Ok(delta(i, j) * pi - pi * pj * (1.0 + c))
}

/// Limit covariance of vertex-degree counts in `G(n,p)`:
/// `pi(j) pi(k) ((j - lambda)(k - lambda)/lambda - 1) + pi(k) delta_jk`.
pub fn gnp_degree_cov(lambda: f64, j: usize, k: usize) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    let (pj, pk) = (pmf_unchecked(lambda, j as u64), pmf_unchecked(lambda, k as u64));
    let c = (j as f64 - lambda) * (k as f64 - lambda) / lambda;
    Ok(pj * pk * (c - 1.0) + pk * delta(j, k))
}

/// Limit covariance of vertex-degree counts in `G(n,m)`:
/// `pi(j) pi(k) (-(j - lambda)(k - lambda)/lambda - 1) + pi(k) delta_jk`.
pub fn gnm_degree_cov(lambda: f64, j: usize, k: usize) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    let (pj, pk) = (pmf_unchecked(lambda, j as u64), pmf_unchecked(lambda, k as u64));
    let c = (j as f64 - lambda) * (k as f64 - lambda) / lambda;
    Ok(pj * pk * (-c - 1.0) + pk * delta(j, k))
}

/// Which limit covariance family a matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovModel {
    Alloc,
    Gnp,
    Gnm,
}

impl CovModel {
    pub fn entry(self, lambda: f64, i: usize, j: usize) -> Result<f64, LimitError> {
        match self {
            CovModel::Alloc => alloc_cov(lambda, i, j),
            CovModel::Gnp => gnp_degree_cov(lambda, i, j),
            CovModel::Gnm => gnm_degree_cov(lambda, i, j),
        }
    }
}

/// `(K+1) x (K+1)` block of a limit covariance family.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCovariance {
    pub model: CovModel,
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
}

impl TheoryCovariance {
    pub fn build(model: CovModel, lambda: f64, k_max: usize) -> Result<Self, LimitError> {
        check_lambda(lambda)?;
        let d = k_max + 1;
        let mut matrix = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = model.entry(lambda, i, j)?;
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        Ok(Self { model, lambda, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Exact `E N_k = n C(n-1, k) p^k (1-p)^{n-1-k}` in `G(n,p)`.
pub fn expected_degree_count_exact(n: u64, p: f64, k: u64) -> Result<f64, LimitError> {
    if n < 2 {
        return Err(LimitError::OutOfRange(format!("n = {n} must be at least 2")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(LimitError::OutOfRange(format!("p = {p} must lie in (0, 1)")));
    }
    if k > n - 1 {
        return Err(LimitError::OutOfRange(format!("k = {k} exceeds n - 1 = {}", n - 1)));
    }
    let ln = ln_binomial(n - 1, k) + k as f64 * p.ln() + (n - 1 - k) as f64 * (-p).ln_1p();
    Ok(n as f64 * ln.exp())
}

/// Limit variance of the standardized number of empty boxes,
/// `e^{-lambda} - e^{-2 lambda} - lambda e^{-2 lambda}`.
pub fn weiss_variance(lambda: f64) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    let e = (-lambda).exp();
    let closed = e - e * e - lambda * e * e;
    let via_regression = residual_variance(e * (1.0 - e), lambda, -lambda * e)?;
    if (closed - via_regression).abs() > 1e-14 {
        return Err(LimitError::Inconsistent(format!(
            "closed form {closed} vs residual variance {via_regression}"
        )));
    }
    Ok(closed)
}

/// Limit constants for the number of spacings exceeding `a/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingsConstants {
    pub sx2: f64,
    pub sxy: f64,
    pub sy2: f64,
    pub residual: f64,
}

pub fn spacings_limit_constants(a: f64) -> Result<SpacingsConstants, LimitError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(LimitError::InvalidA(a));
    }
    let e = (-a).exp();
    let sx2 = e * (1.0 - e);
    let sxy = a * e;
    let sy2 = 1.0;
    let residual = residual_variance(sx2, sy2, sxy)?;
    let closed = e - e * e - a * a * e * e;
    if (closed - residual).abs() > 1e-14 {
        return Err(LimitError::Inconsistent(format!("closed form {closed} vs residual {residual}")));
    }
    Ok(SpacingsConstants { sx2, sxy, sy2, residual })
}

/// Variance `sum_{j,k} a_j a_k sigma_jk` of a linear combination of the
/// limit counts, for coefficients `a_0..a_K`.
///
/// The coefficients are read as the leading part of a sequence growing at
/// most like `A^k`; the part beyond `K` is bounded by continuing the last
/// coefficient at that rate, and the call fails when the resulting change
/// to the variance could exceed [`LINCOMB_TAIL_GATE`].
pub fn lincomb_variance(lambda: f64, coeffs: &[f64], model: CovModel) -> Result<f64, LimitError> {
    check_lambda(lambda)?;
    if coeffs.is_empty() {
        return Err(LimitError::OutOfRange("empty coefficient vector".into()));
    }
    let k_max = coeffs.len() - 1;
    let sigma = TheoryCovariance::build(model, lambda, k_max)?.matrix;
    let a = DVector::from_column_slice(coeffs);
    let quad = (a.transpose() * &sigma * &a)[(0, 0)];

    let growth = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| c.abs().powf(1.0 / k as f64))
        .fold(1.0f64, f64::max);
    let last = coeffs[k_max].abs();
    let mut tail_sd = 0.0;
    if last > 0.0 {
        let mut k = k_max + 1;
        loop {
            let b = last * growth.powi((k - k_max) as i32);
            // diagonal of the G(n,p) family dominates the other two
            let var_k = gnp_degree_cov(lambda, k, k)?.max(0.0);
            let term = b * var_k.sqrt();
            tail_sd += term;
            if !term.is_finite() {
                break;
            }
            if (k as f64) > lambda * growth * growth && (term == 0.0 || term < 1e-18 * tail_sd.max(1e-300)) {
                break;
            }
            if k > k_max + 100_000 {
                tail_sd = f64::INFINITY;
                break;
            }
            k += 1;
        }
    }
    let tail = 2.0 * quad.max(0.0).sqrt() * tail_sd + tail_sd * tail_sd;
    if !(tail <= LINCOMB_TAIL_GATE) {
        return Err(LimitError::Truncation { k: k_max, tail, gate: LINCOMB_TAIL_GATE });
    }
    if quad < -1e-10 {
        return Err(LimitError::Gauss(GaussError::InvalidCovariance(format!(
            "quadratic form {quad:e} is negative"
        ))));
    }
    Ok(quad.max(0.0))
}

/// Covariances with the edge statistic `V = (1/2) sum_k k U_k` in the
/// `G(n,p)` limit, truncated at `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStatMoments {
    /// `Cov(U_k, V)` for `k = 0..=K`.
    pub cov_with_v: Vec<f64>,
    pub var_v: f64,
}

pub fn edge_stat_moments(lambda: f64, k_max: usize) -> Result<EdgeStatMoments, LimitError> {
    PoissonParams::with_truncation(lambda, k_max)?;
    let sigma = TheoryCovariance::build(CovModel::Gnp, lambda, k_max)?.matrix;
    let cov_with_v: Vec<f64> = (0..=k_max)
        .map(|k| 0.5 * (0..=k_max).map(|j| j as f64 * sigma[(k, j)]).sum::<f64>())
        .collect();
    let var_v = 0.5 * (0..=k_max).map(|k| k as f64 * cov_with_v[k]).sum::<f64>();
    Ok(EdgeStatMoments { cov_with_v, var_v })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E1: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn pmf_values() {
        assert!((poisson_pmf(1.0, 0).unwrap() - E1).abs() < 1e-16);
        assert!((poisson_pmf(2.0, 1).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        assert!(matches!(poisson_pmf(0.0, 1), Err(LimitError::InvalidLambda(_))));
        assert!(matches!(poisson_pmf(-1.0, 1), Err(LimitError::InvalidLambda(_))));
        for lambda in [0.1, 1.0, 7.5, 40.0, 300.0] {
            for k in [0u64, 1, 5, 30, 31, 60, 200, 400] {
                let p = poisson_pmf(lambda, k).unwrap();
                assert!((0.0..=1.0).contains(&p), "pmf({lambda}, {k}) = {p}");
            }
        }
    }

    #[test]
    fn log_space_switch_is_continuous() {
        for lambda in [0.5, 5.0, 31.0] {
            let direct = {
                let mut p = (-lambda as f64).exp();
                for i in 1..=31u64 {
                    p *= lambda / i as f64;
                }
                p
            };
            let logged = poisson_pmf(lambda, 31).unwrap();
            assert!((direct - logged).abs() <= 1e-13 * direct);
        }
    }

    #[test]
    fn pmf_sums_to_one() {
        for lambda in [0.5, 1.0, 2.0, 4.0, 25.0] {
            let k = truncation_index(lambda).unwrap();
            let s: f64 = (0..=k as u64).map(|i| poisson_pmf(lambda, i).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "lambda {lambda}: {s}");
            assert!(tail_mass(lambda, k).unwrap() < TAIL_MASS_GATE);
            assert!(tail_mass(lambda, k - 1).unwrap() >= TAIL_MASS_GATE);
        }
    }

    #[test]
    fn alloc_entries() {
        let e2 = (-2.0f64).exp();
        let e4 = (-4.0f64).exp();
        assert!((alloc_cov(2.0, 0, 0).unwrap() - (e2 - 3.0 * e4)).abs() < 1e-16);
        assert!((alloc_cov(2.0, 0, 0).unwrap() - 0.080_388).abs() < 1e-6);
        assert!((alloc_cov(2.0, 0, 1).unwrap() + 4.0 * e4).abs() < 1e-16);
        assert!(alloc_cov(1.0, 1, 1).unwrap() >= 0.0);
        assert_eq!(alloc_cov(3.0, 2, 5).unwrap(), alloc_cov(3.0, 5, 2).unwrap());
    }

    #[test]
    fn gnp_and_gnm_entries() {
        let e2 = (-2.0f64).exp();
        let e4 = (-4.0f64).exp();
        assert!((gnp_degree_cov(2.0, 0, 0).unwrap() - (e2 + e4)).abs() < 1e-16);
        assert!((gnp_degree_cov(2.0, 0, 0).unwrap() - 0.153_651).abs() < 1e-6);
        assert_eq!(gnp_degree_cov(2.0, 0, 1).unwrap(), 0.0);
        assert!((gnm_degree_cov(2.0, 0, 0).unwrap() - (e2 - 3.0 * e4)).abs() < 1e-16);
        assert!((gnm_degree_cov(2.0, 0, 1).unwrap() + 4.0 * e4).abs() < 1e-16);
        for k in 0..8 {
            let pk = poisson_pmf(1.0, k as u64).unwrap();
            let diag = pk * pk * ((k as f64 - 1.0).powi(2) - 1.0) + pk;
            assert!((gnp_degree_cov(1.0, k, k).unwrap() - diag).abs() < 1e-16);
        }
    }

    #[test]
    fn alloc_equals_gnm_bitwise() {
        for lambda in [0.5, 1.0, 2.0, 4.0, 3.3] {
            for i in 0..=60 {
                for j in 0..=60 {
                    assert_eq!(
                        alloc_cov(lambda, i, j).unwrap().to_bits(),
                        gnm_degree_cov(lambda, i, j).unwrap().to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn gnp_minus_gnm_is_rank_one() {
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            let p = TheoryCovariance::build(CovModel::Gnp, lambda, 60).unwrap().matrix;
            let m = TheoryCovariance::build(CovModel::Gnm, lambda, 60).unwrap().matrix;
            let g = DVector::from_fn(61, |k, _| poisson_pmf(lambda, k as u64).unwrap() * (k as f64 - lambda));
            let outer = &g * g.transpose() * (2.0 / lambda);
            assert!((&p - &m - outer).amax() < 1e-12);
        }
    }

    #[test]
    fn theory_matrices_are_psd_and_rows_null() {
        use nalgebra::SymmetricEigen;
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            for model in [CovModel::Alloc, CovModel::Gnp, CovModel::Gnm] {
                let t = TheoryCovariance::build(model, lambda, 60).unwrap();
                assert_eq!(t.matrix, t.matrix.transpose());
                let min = SymmetricEigen::new(t.matrix.clone()).eigenvalues.min();
                assert!(min >= -1e-9, "{model:?} {lambda}: {min}");
            }
            let a = TheoryCovariance::build(CovModel::Alloc, lambda, 60).unwrap().matrix;
            for i in 0..=60 {
                assert!(a.row(i).sum().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exact_degree_means() {
        assert!((expected_degree_count_exact(3, 0.5, 2).unwrap() - 0.75).abs() < 1e-15);
        assert!((expected_degree_count_exact(2, 0.5, 0).unwrap() - 1.0).abs() < 1e-15);
        for (n, p) in [(3u64, 0.5), (10, 0.3), (200, 0.01)] {
            let s: f64 = (0..n).map(|k| expected_degree_count_exact(n, p, k).unwrap()).sum();
            assert!((s - n as f64).abs() < 1e-9);
        }
        let n = 10_000u64;
        let exact = expected_degree_count_exact(n, 2.0 / n as f64, 0).unwrap();
        let limit = n as f64 * poisson_pmf(2.0, 0).unwrap();
        assert!(((exact - limit) / limit).abs() < 1e-3);
        assert!(expected_degree_count_exact(1, 0.5, 0).is_err());
        assert!(expected_degree_count_exact(3, 1.0, 0).is_err());
        assert!(expected_degree_count_exact(3, 0.5, 3).is_err());
    }

    #[test]
    fn weiss_values() {
        let w1 = weiss_variance(1.0).unwrap();
        assert!((w1 - (E1 - 2.0 * E1 * E1)).abs() < 1e-16);
        assert!((w1 - 0.097_208_874_698_216_93).abs() < 1e-15);
        assert_eq!(weiss_variance(2.0).unwrap(), alloc_cov(2.0, 0, 0).unwrap());
        let mut prev = weiss_variance(2.0).unwrap();
        for l in 3..40 {
            let v = weiss_variance(l as f64).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(weiss_variance(0.0).is_err());
    }

    #[test]
    fn spacings_values() {
        let c = spacings_limit_constants(1.0).unwrap();
        assert!((c.sx2 - 0.232_544).abs() < 1e-6);
        assert!((c.sxy - 0.367_879).abs() < 1e-6);
        assert_eq!(c.sy2, 1.0);
        assert!((c.residual - 0.097_208).abs() < 1e-6);
        let half = spacings_limit_constants(std::f64::consts::LN_2).unwrap();
        assert!((half.sx2 - 0.25).abs() < 1e-15);
        assert!(spacings_limit_constants(1e-9).unwrap().residual < 1e-8);
        assert!(matches!(spacings_limit_constants(0.0), Err(LimitError::InvalidA(_))));
    }

    #[test]
    fn lincomb_cases() {
        for k in 0..6 {
            let mut a = vec![0.0; 61];
            a[k] = 1.0;
            let v = lincomb_variance(2.0, &a, CovModel::Gnp).unwrap();
            assert!((v - gnp_degree_cov(2.0, k, k).unwrap()).abs() < 1e-15);
        }
        let edge: Vec<f64> = (0..=60).map(|k| k as f64 / 2.0).collect();
        assert!(lincomb_variance(2.0, &edge, CovModel::Gnm).unwrap().abs() < 1e-10);
        assert!(lincomb_variance(2.0, &edge, CovModel::Alloc).unwrap().abs() < 1e-10);
        assert!((lincomb_variance(2.0, &edge, CovModel::Gnp).unwrap() - 1.0).abs() < 1e-6);
        // coefficients cut off where the Poisson mass is still large
        let short: Vec<f64> = (0..=3).map(|k| k as f64 / 2.0).collect();
        assert!(matches!(lincomb_variance(2.0, &short, CovModel::Gnp), Err(LimitError::Truncation { .. })));
    }

    #[test]
    fn edge_moments() {
        let m = edge_stat_moments(2.0, 60).unwrap();
        assert!((m.var_v - 1.0).abs() < 1e-9);
        assert!((m.cov_with_v[0] + 2.0 * (-2.0f64).exp()).abs() < 1e-9);
        for k in 0..10 {
            let want = poisson_pmf(2.0, k as u64).unwrap() * (k as f64 - 2.0);
            assert!((m.cov_with_v[k] - want).abs() < 1e-12);
        }
        let bilinear: f64 = (0..=60).map(|k| k as f64 * m.cov_with_v[k]).sum();
        assert!((bilinear - 2.0 * m.var_v).abs() < 1e-12);
        assert!(matches!(edge_stat_moments(2.0, 5), Err(LimitError::Truncation { .. })));
    }
}
