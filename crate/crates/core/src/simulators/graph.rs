use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{DegreeCounts, SimError, DEFAULT_TAIL_INDEX};

/// Degrees and edge count of a sampled graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSample {
    pub degrees: Vec<u32>,
    pub edges: u64,
}

fn pair_count(n: usize) -> u64 {
    n as u64 * (n as u64).saturating_sub(1) / 2
}

/// Decodes a pair index `e = v (v - 1) / 2 + u` into `(u, v)` with `u < v`.
pub fn edge_from_index(e: u64) -> (usize, usize) {
    let mut v = ((1.0 + (1.0 + 8.0 * e as f64).sqrt()) / 2.0) as u64;
    while v * v.saturating_sub(1) / 2 > e {
        v -= 1;
    }
    while (v + 1) * v / 2 <= e {
        v += 1;
    }
    ((e - v * (v - 1) / 2) as usize, v as usize)
}

fn add_edge(degrees: &mut [u32], e: u64) {
    let (u, v) = edge_from_index(e);
    degrees[u] += 1;
    degrees[v] += 1;
}

/// `G(n,p)` by geometric skipping over the pair index space.
pub fn gnp_degrees<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<DegreeSample, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidParameter(format!("p = {p} must lie in [0, 1]")));
    }
    let total = pair_count(n);
    let mut degrees = vec![0u32; n];
    let mut edges = 0u64;
    if p == 0.0 {
        return Ok(DegreeSample { degrees, edges });
    }
    if p == 1.0 {
        degrees.iter_mut().for_each(|d| *d = (n - 1) as u32);
        return Ok(DegreeSample { degrees, edges: total });
    }
    let geo = Geometric::new(p).map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    let mut next = 0u64;
    loop {
        next = match next.checked_add(geo.sample(rng)) {
            Some(e) if e < total => e,
            _ => break,
        };
        add_edge(&mut degrees, next);
        edges += 1;
        next += 1;
    }
    Ok(DegreeSample { degrees, edges })
}

/// `G(n,m)`: `m` distinct pairs chosen uniformly. Rejection into a hash set
/// while `m` is at most half the pairs, a partial Fisher-Yates shuffle of the
/// pair indices otherwise.
pub fn gnm_degrees<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Result<DegreeSample, SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("n must be at least 1".into()));
    }
    let total = pair_count(n);
    if m > total {
        return Err(SimError::TooManyEdges { m, max: total });
    }
    let mut degrees = vec![0u32; n];
    if 2 * m <= total {
        let mut chosen = HashSet::with_capacity(m as usize);
        while (chosen.len() as u64) < m {
            let e = rng.random_range(0..total);
            if chosen.insert(e) {
                add_edge(&mut degrees, e);
            }
        }
    } else {
        let mut idx: Vec<u64> = (0..total).collect();
        for i in 0..m as usize {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
            add_edge(&mut degrees, idx[i]);
        }
    }
    Ok(DegreeSample { degrees, edges: m })
}

pub fn sample_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<DegreeCounts, SimError> {
    let s = gnp_degrees(n, p, rng)?;
    Ok(DegreeCounts::from_degrees(&s.degrees, s.edges, DEFAULT_TAIL_INDEX))
}

pub fn sample_gnm<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Result<DegreeCounts, SimError> {
    let s = gnm_degrees(n, m, rng)?;
    Ok(DegreeCounts::from_degrees(&s.degrees, s.edges, DEFAULT_TAIL_INDEX))
}

/// Degree counts of an explicit simple graph on vertices `0..n`.
pub fn degree_counts_from_edges(n: usize, edges: &[(usize, usize)]) -> Result<DegreeCounts, SimError> {
    let mut seen = HashSet::with_capacity(edges.len());
    let mut degrees = vec![0u32; n];
    for &(a, b) in edges {
        if a == b {
            return Err(SimError::SelfLoop(a));
        }
        for v in [a, b] {
            if v >= n {
                return Err(SimError::VertexOutOfRange { vertex: v, n });
            }
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(SimError::DuplicateEdge(a, b));
        }
        degrees[a] += 1;
        degrees[b] += 1;
    }
    Ok(DegreeCounts::from_degrees(&degrees, edges.len() as u64, DEFAULT_TAIL_INDEX))
}
