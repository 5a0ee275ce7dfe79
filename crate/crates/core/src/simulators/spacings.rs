use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Gaps between `n` uniform points on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingsSample {
    pub n: usize,
    pub s: Vec<f64>,
}

const SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// Points are drawn on the 2^-53 grid and sorted as integers; a draw with a
/// repeated point is redrawn so every gap is strictly positive.
pub fn sample_spacings<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SpacingsSample, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be at least 1".into()));
    }
    let mut pts = vec![0u64; n];
    loop {
        for p in pts.iter_mut() {
            *p = rng.random::<u64>() >> 11;
        }
        pts.sort_unstable();
        if pts.windows(2).all(|w| w[0] < w[1]) {
            break;
        }
    }
    let mut s = Vec::with_capacity(n);
    for w in pts.windows(2) {
        s.push((w[1] - w[0]) as f64 * SCALE);
    }
    // wrap-around gap from the last point back to the first
    s.push(((1u64 << 53) - pts[n - 1] + pts[0]) as f64 * SCALE);
    Ok(SpacingsSample { n, s })
}

/// Number of spacings strictly longer than `a / n`.
pub fn exceedance_count(sample: &SpacingsSample, a: f64) -> Result<u64, SimError> {
    if !(a > 0.0) {
        return Err(SimError::InvalidParameter(format!("a = {a} must be positive")));
    }
    let t = a / sample.n as f64;
    Ok(sample.s.iter().filter(|&&x| x > t).count() as u64)
}
