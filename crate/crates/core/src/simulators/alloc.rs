use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{OccupancyProfile, SimError, DEFAULT_TAIL_INDEX};

/// Per-box ball counts after `m` independent uniform throws into `n` boxes.
pub fn allocation_box_counts<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Result<Vec<u32>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be at least 1".into()));
    }
    if m > u32::MAX as u64 {
        return Err(SimError::InvalidParameter(format!("m = {m} is too large")));
    }
    let mut boxes = vec![0u32; n];
    for _ in 0..m {
        boxes[rng.random_range(0..n)] += 1;
    }
    Ok(boxes)
}

pub fn sample_allocation<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Result<OccupancyProfile, SimError> {
    let boxes = allocation_box_counts(n, m, rng)?;
    Ok(OccupancyProfile::from_box_counts(&boxes, DEFAULT_TAIL_INDEX))
}

/// Per-box counts when the number of balls is `Po(lambda n)`: the boxes are
/// then independent `Po(lambda)`.
pub fn poissonized_box_counts<R: Rng + ?Sized>(n: usize, lambda: f64, rng: &mut R) -> Result<Vec<u32>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be at least 1".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SimError::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let po = Poisson::new(lambda).map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    Ok((0..n).map(|_| po.sample(rng) as u32).collect())
}

/// Poissonized allocation; returns the profile and the total ball count `M`.
pub fn sample_poissonized_allocation<R: Rng + ?Sized>(
    n: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<(OccupancyProfile, u64), SimError> {
    let boxes = poissonized_box_counts(n, lambda, rng)?;
    let profile = OccupancyProfile::from_box_counts(&boxes, DEFAULT_TAIL_INDEX);
    let m = profile.m;
    Ok((profile, m))
}
