//! Analytic transfer from unconditioned to conditioned limits.
//!
//! Conditioning the `G(n,p)` degree limit on the edge statistic `V`, or the
//! Poissonized allocation limit on the ball count, must reproduce the
//! closed-form `G(n,m)` and fixed-`m` allocation covariances.

use nalgebra::{DMatrix, DVector};

use crate::gauss_cond::{condition_on_scalar, conjugate_by_transform, ConditionalGaussian, JointGaussian};
use crate::limit_theory::{edge_stat_moments, poisson_pmf, CovModel, LimitError, TheoryCovariance};
use crate::monotone::cumulative_matrix;

/// Joint limit of `(U_0, .., U_K, V)` for `G(n,p)`.
pub fn gnp_edge_joint(lambda: f64, k_max: usize) -> Result<JointGaussian, LimitError> {
    let moments = edge_stat_moments(lambda, k_max)?;
    let sigma = TheoryCovariance::build(CovModel::Gnp, lambda, k_max)?.matrix;
    let d = k_max + 2;
    let mut cov = DMatrix::zeros(d, d);
    cov.view_mut((0, 0), (k_max + 1, k_max + 1)).copy_from(&sigma);
    for k in 0..=k_max {
        cov[(k, k_max + 1)] = moments.cov_with_v[k];
        cov[(k_max + 1, k)] = moments.cov_with_v[k];
    }
    cov[(k_max + 1, k_max + 1)] = moments.var_v;
    Ok(JointGaussian::new(k_max + 1, 1, DVector::zeros(d), cov)?)
}

/// Joint limit of `(1[W = 0], .., 1[W = J], W)` summed over boxes with
/// `W ~ Po(lambda)`, i.e. the Poissonized allocation before conditioning.
pub fn poissonized_alloc_joint(lambda: f64, j_max: usize) -> Result<JointGaussian, LimitError> {
    let pi: Vec<f64> = (0..=j_max).map(|k| poisson_pmf(lambda, k as u64)).collect::<Result<_, _>>()?;
    let d = j_max + 2;
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..=j_max {
        for j in 0..=j_max {
            let delta = if i == j { pi[i] } else { 0.0 };
            cov[(i, j)] = delta - pi[i] * pi[j];
        }
        let c = (i as f64 - lambda) * pi[i];
        cov[(i, j_max + 1)] = c;
        cov[(j_max + 1, i)] = c;
    }
    cov[(j_max + 1, j_max + 1)] = lambda;
    Ok(JointGaussian::new(j_max + 1, 1, DVector::zeros(d), cov)?)
}

/// Result of conditioning a joint limit and comparing with a closed form.
#[derive(Debug, Clone)]
pub struct TransferCheck {
    pub lambda: f64,
    pub k_max: usize,
    pub conditioned: ConditionalGaussian,
    pub target: DMatrix<f64>,
    pub max_abs_diff: f64,
}

/// Conditions the `G(n,p)` limit on `V = 0` and compares with `G(n,m)`.
pub fn gnp_to_gnm(lambda: f64, k_max: usize) -> Result<TransferCheck, LimitError> {
    let joint = gnp_edge_joint(lambda, k_max)?;
    let conditioned = condition_on_scalar(&joint, 0.0)?;
    let target = TheoryCovariance::build(CovModel::Gnm, lambda, k_max)?.matrix;
    let max_abs_diff = (&conditioned.cov - &target).amax().max(conditioned.mean.amax());
    Ok(TransferCheck { lambda, k_max, conditioned, target, max_abs_diff })
}

/// Conditions the Poissonized allocation limit on the ball count through the
/// cumulative-sum transform and compares with the fixed-`m` allocation
/// covariance.
pub fn poissonized_to_alloc(lambda: f64, j_max: usize) -> Result<TransferCheck, LimitError> {
    let joint = poissonized_alloc_joint(lambda, j_max)?;
    let t = cumulative_matrix(j_max + 1);
    let conditioned = conjugate_by_transform(&t, &joint, 0.0)?;
    let target = TheoryCovariance::build(CovModel::Alloc, lambda, j_max)?.matrix;
    let max_abs_diff = (&conditioned.cov - &target).amax().max(conditioned.mean.amax());
    Ok(TransferCheck { lambda, k_max: j_max, conditioned, target, max_abs_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_conditions_to_gnm() {
        for lambda in [0.5, 1.0, 2.0, 4.0] {
            let t = gnp_to_gnm(lambda, 60).unwrap();
            assert!(t.max_abs_diff < 1e-10, "lambda {lambda}: {}", t.max_abs_diff);
        }
    }

    #[test]
    fn cumulative_transform_commutes_with_conditioning() {
        let joint = poissonized_alloc_joint(2.0, 8).unwrap();
        let direct = condition_on_scalar(&joint, 0.0).unwrap();
        let via = poissonized_to_alloc(2.0, 8).unwrap();
        assert!((&via.conditioned.cov - &direct.cov).amax() < 1e-10);
        assert!((&via.conditioned.mean - &direct.mean).amax() < 1e-10);
        assert!(via.max_abs_diff < 1e-12);
    }

    #[test]
    fn weiss_from_scalar_conditioning() {
        let joint = poissonized_alloc_joint(1.0, 0).unwrap();
        let c = condition_on_scalar(&joint, 0.0).unwrap();
        let w = crate::limit_theory::weiss_variance(1.0).unwrap();
        assert!((c.cov[(0, 0)] - w).abs() < 1e-15);
        assert!((c.gamma[(0, 0)] + (-1.0f64).exp()).abs() < 1e-15);
    }
}
