//! Independent oracles shared by the integration tests: closed forms written
//! out directly and brute-force enumeration of small instances.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Poisson weights by the product recurrence, independent of the library.
pub fn pi(lambda: f64, k: usize) -> f64 {
    let mut p = (-lambda).exp();
    for i in 1..=k {
        p *= lambda / i as f64;
    }
    p
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Fixed-m allocation covariance (and G(n,m) degree covariance).
pub fn alloc_cov(lambda: f64, i: usize, j: usize) -> f64 {
    let (a, b) = (pi(lambda, i), pi(lambda, j));
    a * delta(i, j) - a * b - a * b * (i as f64 - lambda) * (j as f64 - lambda) / lambda
}

/// G(n,p) degree covariance.
pub fn gnp_cov(lambda: f64, i: usize, j: usize) -> f64 {
    let (a, b) = (pi(lambda, i), pi(lambda, j));
    a * delta(i, j) - a * b + a * b * (i as f64 - lambda) * (j as f64 - lambda) / lambda
}

pub fn matrix(k_max: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(k_max + 1, k_max + 1, f)
}

/// Mean and covariance of a weighted list of integer vectors.
pub fn weighted_moments(rows: &[(Vec<f64>, f64)]) -> (DVector<f64>, DMatrix<f64>) {
    let d = rows[0].0.len();
    let total: f64 = rows.iter().map(|r| r.1).sum();
    let mut mean = DVector::zeros(d);
    for (x, w) in rows {
        for i in 0..d {
            mean[i] += w * x[i] / total;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, w) in rows {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += w * (x[i] - mean[i]) * (x[j] - mean[j]) / total;
            }
        }
    }
    (mean, cov)
}

/// Exact moments of `(N_0, .., N_K)` in `G(n, m)` by listing every edge set.
pub fn gnm_exact_moments(n: usize, m: usize, k_max: usize) -> (DVector<f64>, DMatrix<f64>) {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut rows = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let mut deg = vec![0usize; n];
        for (e, (a, b)) in pairs.iter().enumerate() {
            if mask >> e & 1 == 1 {
                deg[*a] += 1;
                deg[*b] += 1;
            }
        }
        let mut counts = vec![0.0; k_max + 1];
        for d in deg {
            if d <= k_max {
                counts[d] += 1.0;
            }
        }
        rows.push((counts, 1.0));
    }
    weighted_moments(&rows)
}

/// Exact moments of `(Z_0, .., Z_K)` for `m` balls in `n` boxes by listing
/// all `n^m` throws.
pub fn alloc_exact_moments(n: usize, m: usize, k_max: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mut rows = Vec::new();
    for code in 0..n.pow(m as u32) {
        let mut boxes = vec![0usize; n];
        let mut c = code;
        for _ in 0..m {
            boxes[c % n] += 1;
            c /= n;
        }
        let mut z = vec![0.0; k_max + 1];
        for b in boxes {
            if b <= k_max {
                z[b] += 1.0;
            }
        }
        rows.push((z, 1.0));
    }
    weighted_moments(&rows)
}
