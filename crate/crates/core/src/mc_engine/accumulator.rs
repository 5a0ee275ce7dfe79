use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::McError;

/// Mergeable streaming moments of a vector statistic.
///
/// `comoment` holds the sum of outer products of deviations from the running
/// mean; `third_diag` and `fourth_diag` hold per-coordinate central power
/// sums. Merging uses the pairwise update formulas, so any partition of the
/// data merged in any order gives the same moments up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub mean: DVector<f64>,
    pub comoment: DMatrix<f64>,
    pub third_diag: DVector<f64>,
    pub fourth_diag: DVector<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(dim),
            comoment: DMatrix::zeros(dim, dim),
            third_diag: DVector::zeros(dim),
            fourth_diag: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, x: &[f64]) -> Result<(), McError> {
        if x.len() != self.dim() {
            return Err(McError::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let n1 = self.count as f64;
        let n = n1 + 1.0;
        let d = self.dim();
        let delta: Vec<f64> = (0..d).map(|i| x[i] - self.mean[i]).collect();
        for i in 0..d {
            let (di, m2, m3) = (delta[i], self.comoment[(i, i)], self.third_diag[i]);
            let dn = di / n;
            let term = di * dn * n1;
            self.fourth_diag[i] += term * dn * dn * (n * n - 3.0 * n + 3.0) + 6.0 * dn * dn * m2 - 4.0 * dn * m3;
            self.third_diag[i] += term * dn * (n - 2.0) - 3.0 * dn * m2;
        }
        let w = n1 / n;
        for j in 0..d {
            for i in 0..d {
                self.comoment[(i, j)] += w * delta[i] * delta[j];
            }
        }
        for i in 0..d {
            self.mean[i] += delta[i] / n;
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<(), McError> {
        if other.dim() != self.dim() {
            return Err(McError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let d = self.dim();
        let delta = &other.mean - &self.mean;
        for i in 0..d {
            let di = delta[i];
            let (m2a, m2b) = (self.comoment[(i, i)], other.comoment[(i, i)]);
            let (m3a, m3b) = (self.third_diag[i], other.third_diag[i]);
            self.fourth_diag[i] += other.fourth_diag[i]
                + di.powi(4) * na * nb * (na * na - na * nb + nb * nb) / n.powi(3)
                + 6.0 * di * di * (na * na * m2b + nb * nb * m2a) / (n * n)
                + 4.0 * di * (na * m3b - nb * m3a) / n;
            self.third_diag[i] +=
                m3b + di.powi(3) * na * nb * (na - nb) / (n * n) + 3.0 * di * (na * m2b - nb * m2a) / n;
        }
        let w = na * nb / n;
        for j in 0..d {
            for i in 0..d {
                self.comoment[(i, j)] += other.comoment[(i, j)] + w * delta[i] * delta[j];
            }
        }
        self.mean += delta * (nb / n);
        self.count += other.count;
        Ok(())
    }

    /// Unbiased covariance estimate `comoment / (count - 1)`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let c = &self.comoment / (self.count.max(2) - 1) as f64;
        // average out rounding asymmetry
        (&c + c.transpose()) * 0.5
    }

    /// Per-coordinate standard error of the variance estimate from the
    /// fourth central moment.
    pub fn variance_se_from_fourth(&self) -> DVector<f64> {
        let n = self.count as f64;
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| {
                let m2 = self.comoment[(i, i)] / n;
                let m4 = self.fourth_diag[i] / n;
                ((m4 - m2 * m2).max(0.0) / n).sqrt()
            }),
        )
    }
}

/// Number of contiguous batches used for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Moments kept separately for each of `BATCHES` contiguous replicate
/// ranges; the pooled accumulator is their in-order merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchedAccumulator {
    pub batches: Vec<MomentAccumulator>,
}

impl BatchedAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { batches: vec![MomentAccumulator::new(dim); BATCHES] }
    }

    pub fn dim(&self) -> usize {
        self.batches[0].dim()
    }

    pub fn count(&self) -> u64 {
        self.batches.iter().map(|b| b.count).sum()
    }

    /// Batch that replicate `index` out of `total` belongs to.
    pub fn batch_of(index: u64, total: u64) -> usize {
        ((index as u128 * BATCHES as u128) / total.max(1) as u128) as usize
    }

    pub fn pooled(&self) -> MomentAccumulator {
        let mut acc = MomentAccumulator::new(self.dim());
        for b in &self.batches {
            acc.merge(b).expect("batches share a dimension");
        }
        acc
    }

    /// Batch-means standard error of every covariance entry.
    pub fn covariance_se(&self) -> Result<DMatrix<f64>, McError> {
        let usable: Vec<DMatrix<f64>> =
            self.batches.iter().filter(|b| b.count >= 2).map(MomentAccumulator::covariance).collect();
        if usable.len() < 2 {
            return Err(McError::InsufficientReplicates { count: self.count(), required: 2 * BATCHES as u64 });
        }
        let k = usable.len() as f64;
        let d = self.dim();
        let mean = usable.iter().fold(DMatrix::zeros(d, d), |a, c| a + c) / k;
        let ss = usable.iter().fold(DMatrix::zeros(d, d), |a, c| a + (c - &mean).component_mul(&(c - &mean)));
        Ok((ss / (k - 1.0) / k).map(f64::sqrt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let n = xs.len() as f64;
        let d = xs[0].len();
        let mean: Vec<f64> = (0..d).map(|i| xs.iter().map(|x| x[i]).sum::<f64>() / n).collect();
        let cov = (0..d)
            .map(|i| (0..d).map(|j| xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>()).collect())
            .collect();
        let m4 = (0..d).map(|i| xs.iter().map(|x| (x[i] - mean[i]).powi(4)).sum::<f64>()).collect();
        (mean, cov, m4)
    }

    #[test]
    fn matches_two_pass_moments() {
        let xs: Vec<Vec<f64>> = (0..57).map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i % 7) as f64, 1.0]).collect();
        let mut acc = MomentAccumulator::new(3);
        for x in &xs {
            acc.push(x).unwrap();
        }
        let (mean, cov, m4) = naive(&xs);
        for i in 0..3 {
            assert!((acc.mean[i] - mean[i]).abs() < 1e-12);
            assert!((acc.fourth_diag[i] - m4[i]).abs() < 1e-9);
            for j in 0..3 {
                assert!((acc.comoment[(i, j)] - cov[i][j]).abs() < 1e-10);
            }
        }
        assert_eq!(acc.comoment[(2, 2)], 0.0);
        assert!(acc.push(&[1.0]).is_err());
    }

    #[test]
    fn batch_assignment_is_contiguous() {
        let total = 103;
        let b: Vec<usize> = (0..total).map(|i| BatchedAccumulator::batch_of(i, total)).collect();
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!((b[0], b[102]), (0, BATCHES - 1));
    }

    proptest! {
        #[test]
        fn merge_is_partition_invariant(
            xs in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..80),
            cut1 in 0usize..80, cut2 in 0usize..80,
        ) {
            let n = xs.len();
            let (a, b) = (cut1.min(cut2) % (n + 1), cut1.max(cut2) % (n + 1));
            let (a, b) = (a.min(b), a.max(b));
            let mut whole = MomentAccumulator::new(3);
            xs.iter().for_each(|x| whole.push(x).unwrap());
            let mut parts: Vec<MomentAccumulator> = [&xs[..a], &xs[a..b], &xs[b..]].iter().map(|s| {
                let mut acc = MomentAccumulator::new(3);
                s.iter().for_each(|x| acc.push(x).unwrap());
                acc
            }).collect();
            // (p2 + p0) + p1 exercises both commutativity and associativity
            let mut left = parts.remove(2);
            left.merge(&parts[0]).unwrap();
            left.merge(&parts[1]).unwrap();
            prop_assert_eq!(left.count, whole.count);
            let scale = 1.0 + whole.fourth_diag.amax();
            prop_assert!((&left.mean - &whole.mean).amax() < 1e-10);
            prop_assert!((&left.comoment - &whole.comoment).amax() < 1e-10 * (1.0 + whole.comoment.amax()));
            prop_assert!((&left.third_diag - &whole.third_diag).amax() < 1e-10 * scale);
            prop_assert!((&left.fourth_diag - &whole.fourth_diag).amax() < 1e-10 * scale);
            let c = left.covariance();
            prop_assert_eq!(c.clone(), c.transpose());
        }
    }
}
