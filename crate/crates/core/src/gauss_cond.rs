//! Exact conditioning of jointly Gaussian vectors.
//!
//! A [`JointGaussian`] holds the mean and covariance of a pair `(X, Y)` with
//! `X` in the first `q` coordinates and `Y` in the last `r`. Conditioning on
//! `Y = y` gives the Gaussian law of `X + A (y - Y)` with
//! `A = Cov(X, Y) Var(Y)^{-1}`; its covariance is the Schur complement of
//! `Var(Y)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Relative tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue may be as low as `-PSD_TOL * trace`.
pub const PSD_TOL: f64 = 1e-10;
/// Conditioning is refused above this condition number of `Var(Y)`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block dimensions must be positive (q = {q}, r = {r})")]
    EmptyBlock { q: usize, r: usize },
    #[error("covariance is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Var(Y) block is singular (condition number {condition:e})")]
    SingularYBlock { condition: f64 },
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("transform is singular (condition number {condition:e})")]
    SingularTransform { condition: f64 },
}

fn check_symmetric(cov: &DMatrix<f64>) -> Result<(), GaussError> {
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    for i in 0..cov.nrows() {
        for j in (i + 1)..cov.ncols() {
            if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(GaussError::NotSymmetric { i, j });
            }
        }
    }
    Ok(())
}

/// Symmetrizes, checks the PSD floor and clamps rounding-level negative
/// eigenvalues to zero.
fn clamp_psd(cov: DMatrix<f64>) -> Result<DMatrix<f64>, GaussError> {
    let sym = (&cov + cov.transpose()) * 0.5;
    if sym.nrows() == 0 {
        return Ok(sym);
    }
    let trace = sym.trace().abs();
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.min();
    if min < -PSD_TOL * trace {
        return Err(GaussError::NotPsd { min_eigenvalue: min });
    }
    if min >= 0.0 {
        return Ok(sym);
    }
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok((&rebuilt + rebuilt.transpose()) * 0.5)
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Mean and covariance of a Gaussian pair `(X, Y)`, `X` of dimension `q`
/// and `Y` of dimension `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussian {
    q: usize,
    r: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl JointGaussian {
    pub fn new(q: usize, r: usize, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, GaussError> {
        if q == 0 || r == 0 {
            return Err(GaussError::EmptyBlock { q, r });
        }
        let d = q + r;
        if mean.len() != d {
            return Err(GaussError::DimensionMismatch { expected: d, found: mean.len() });
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(GaussError::DimensionMismatch { expected: d, found: cov.nrows().max(cov.ncols()) });
        }
        check_symmetric(&cov)?;
        let trace = cov.trace().abs();
        let min = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if min < -PSD_TOL * trace {
            return Err(GaussError::NotPsd { min_eigenvalue: min });
        }
        Ok(Self { q, r, mean, cov })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_rows(q: usize, r: usize, mean: &[f64], cov: &[Vec<f64>]) -> Result<Self, GaussError> {
        let d = cov.len();
        if cov.iter().any(|row| row.len() != d) {
            return Err(GaussError::InvalidCovariance("ragged covariance rows".into()));
        }
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Self::new(q, r, DVector::from_column_slice(mean), m)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn x_mean(&self) -> DVector<f64> {
        self.mean.rows(0, self.q).into_owned()
    }

    pub fn y_mean(&self) -> DVector<f64> {
        self.mean.rows(self.q, self.r).into_owned()
    }

    pub fn sigma_xx(&self) -> DMatrix<f64> {
        self.cov.view((0, 0), (self.q, self.q)).into_owned()
    }

    pub fn sigma_xy(&self) -> DMatrix<f64> {
        self.cov.view((0, self.q), (self.q, self.r)).into_owned()
    }

    pub fn sigma_yy(&self) -> DMatrix<f64> {
        self.cov.view((self.q, self.q), (self.r, self.r)).into_owned()
    }

    /// Condition number of the `Var(Y)` block (infinite when singular).
    pub fn y_condition(&self) -> f64 {
        condition_number(&self.sigma_yy())
    }
}

/// Law of `X` given `Y = y`, plus the regression coefficients `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `q x r` regression matrix; for scalar `Y` this is the column `gamma`.
    pub gamma: DMatrix<f64>,
}

/// Conditions `X` on `Y = y` for a vector-valued `Y`.
pub fn condition_on_vector(jg: &JointGaussian, y: &[f64]) -> Result<ConditionalGaussian, GaussError> {
    if y.len() != jg.r {
        return Err(GaussError::DimensionMismatch { expected: jg.r, found: y.len() });
    }
    let syy = jg.sigma_yy();
    let condition = condition_number(&syy);
    if !(condition <= MAX_CONDITION) {
        return Err(GaussError::SingularYBlock { condition });
    }
    let chol = syy.cholesky().ok_or(GaussError::SingularYBlock { condition })?;
    let sxy = jg.sigma_xy();
    // A^T = Var(Y)^{-1} Cov(Y, X)
    let a = chol.solve(&sxy.transpose()).transpose();
    let dy = DVector::from_column_slice(y) - jg.y_mean();
    let mean = jg.x_mean() + &a * dy;
    let cov = clamp_psd(jg.sigma_xx() - &a * sxy.transpose())?;
    Ok(ConditionalGaussian { mean, cov, gamma: a })
}

/// Conditions on a scalar `Y = xi` using the entrywise formulas
/// `gamma_i = Cov(X_i, Y) / Var(Y)` and
/// `Cov_ij - Cov(X_i, Y) Cov(X_j, Y) / Var(Y)`.
pub fn condition_on_scalar(jg: &JointGaussian, xi: f64) -> Result<ConditionalGaussian, GaussError> {
    if jg.r != 1 {
        return Err(GaussError::DimensionMismatch { expected: 1, found: jg.r });
    }
    let q = jg.q;
    let vy = jg.cov[(q, q)];
    if !(vy > 0.0) {
        return Err(GaussError::SingularYBlock { condition: f64::INFINITY });
    }
    let ey = jg.mean[q];
    let cxy: Vec<f64> = (0..q).map(|i| jg.cov[(i, q)]).collect();
    let gamma = DVector::from_iterator(q, cxy.iter().map(|c| c / vy));
    let mean = DVector::from_fn(q, |i, _| jg.mean[i] + gamma[i] * (xi - ey));
    let cov = DMatrix::from_fn(q, q, |i, j| jg.cov[(i, j)] - cxy[i] * cxy[j] / vy);
    let cov = clamp_psd(cov)?;
    Ok(ConditionalGaussian { mean, cov, gamma: DMatrix::from_column_slice(q, 1, gamma.as_slice()) })
}

/// Variance of `X` left after conditioning on a scalar `Y`:
/// `sx2 - sxy^2 / sy2`, equal to `(1 - rho^2) sx2`.
pub fn residual_variance(sx2: f64, sy2: f64, sxy: f64) -> Result<f64, GaussError> {
    if !(sy2 > 0.0) {
        return Err(GaussError::InvalidCovariance(format!("Var(Y) = {sy2} must be positive")));
    }
    if !(sx2 >= 0.0) {
        return Err(GaussError::InvalidCovariance(format!("Var(X) = {sx2} must be non-negative")));
    }
    let bound = sx2 * sy2;
    if sxy * sxy > bound + 1e-12 * bound.max(1.0) {
        return Err(GaussError::InvalidCovariance(format!(
            "Cauchy-Schwarz violated: sxy^2 = {} > sx2 * sy2 = {}",
            sxy * sxy,
            bound
        )));
    }
    let res = (sx2 - sxy * sxy / sy2).max(0.0).min(sx2);
    if sx2 > 0.0 {
        let rho = sxy / (sx2 * sy2).sqrt();
        let alt = (1.0 - rho * rho) * sx2;
        debug_assert!((alt - res).abs() <= 1e-12 * sx2.max(1.0), "{alt} vs {res}");
    }
    Ok(res)
}

/// Conditions `T X` on the scalar `Y = xi` and maps the result back with
/// `T^{-1}`. For invertible `T` this agrees with conditioning `X` directly.
pub fn conjugate_by_transform(
    t: &DMatrix<f64>,
    jg: &JointGaussian,
    xi: f64,
) -> Result<ConditionalGaussian, GaussError> {
    let q = jg.q;
    if t.nrows() != q || t.ncols() != q {
        return Err(GaussError::DimensionMismatch { expected: q, found: t.nrows().max(t.ncols()) });
    }
    if jg.r != 1 {
        return Err(GaussError::DimensionMismatch { expected: 1, found: jg.r });
    }
    let sv = t.clone().svd(false, false).singular_values;
    let condition = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(GaussError::SingularTransform { condition });
    }
    let t_inv = t.clone().try_inverse().ok_or(GaussError::SingularTransform { condition })?;

    let d = q + 1;
    let mut big = DMatrix::<f64>::identity(d, d);
    big.view_mut((0, 0), (q, q)).copy_from(t);
    let mean = &big * jg.mean();
    let cov = &big * jg.cov() * big.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let transformed = JointGaussian::new(q, 1, mean, cov)?;
    let cond = condition_on_scalar(&transformed, xi)?;

    let mean = &t_inv * cond.mean;
    let cov = &t_inv * cond.cov * t_inv.transpose();
    let cov = clamp_psd(cov)?;
    Ok(ConditionalGaussian { mean, cov, gamma: &t_inv * cond.gamma })
}
