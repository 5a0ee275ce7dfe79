//! Stochastic monotonicity at desk scale.
//!
//! `X` is stochastically increasing in `Y` when the conditional CDFs
//! `P(X <= x | Y = y)` decrease in `y` for every `x`. For the small models
//! here the conditional laws are computed exactly with integer weights, so
//! the dominance checks can run with zero tolerance.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use nalgebra::DMatrix;
use thiserror::Error;

/// Absolute CDF tolerance of the floating-point dominance check.
pub const DOMINANCE_TOL: f64 = 1e-12;

const MAX_ENUMERATION: u128 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonotoneError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("({n}, {m}) is outside the exactly enumerable range")]
    OutOfDeskRange { n: usize, m: usize },
    #[error("distributions are not stochastically ordered (witness x = {witness})")]
    NotComparable { witness: f64 },
}

/// A distribution on finitely many real atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self, MonotoneError> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(MonotoneError::InvalidDistribution("support and probs must be non-empty and equal length".into()));
        }
        if support.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MonotoneError::InvalidDistribution("support must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(MonotoneError::InvalidDistribution("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MonotoneError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { support, probs })
    }

    pub fn point_mass(x: f64) -> Self {
        Self { support: vec![x], probs: vec![1.0] }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, x: f64) -> f64 {
        self.support.iter().position(|s| *s == x).map_or(0.0, |i| self.probs[i])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.support.iter().zip(&self.probs).take_while(|(s, _)| **s <= x).map(|(_, p)| p).sum()
    }

    /// Law of `-X`.
    pub fn negated(&self) -> Self {
        Self {
            support: self.support.iter().rev().map(|x| -x).collect(),
            probs: self.probs.iter().rev().copied().collect(),
        }
    }
}

/// A distribution on integer atoms with exact integer weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    support: Vec<i64>,
    weights: Vec<u128>,
    total: u128,
}

impl ExactDistribution {
    /// Aggregates `(value, weight)` pairs; zero weights are dropped.
    pub fn from_weighted<I: IntoIterator<Item = (i64, u128)>>(items: I) -> Result<Self, MonotoneError> {
        let mut map = BTreeMap::new();
        for (x, w) in items {
            if w > 0 {
                *map.entry(x).or_insert(0u128) += w;
            }
        }
        if map.is_empty() {
            return Err(MonotoneError::InvalidDistribution("no positive weight".into()));
        }
        let total = map.values().sum();
        let (support, weights) = map.into_iter().unzip();
        Ok(Self { support, weights, total })
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn weights(&self) -> &[u128] {
        &self.weights
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    /// Exact `P(X = x)` as `(numerator, denominator)`.
    pub fn prob_of(&self, x: i64) -> (u128, u128) {
        let w = self.support.iter().position(|s| *s == x).map_or(0, |i| self.weights[i]);
        (w, self.total)
    }

    pub fn negated(&self) -> Self {
        Self {
            support: self.support.iter().rev().map(|x| -x).collect(),
            weights: self.weights.iter().rev().copied().collect(),
            total: self.total,
        }
    }

    pub fn to_finite(&self) -> FiniteDistribution {
        let probs = self.weights.iter().map(|w| *w as f64 / self.total as f64).collect();
        FiniteDistribution { support: self.support.iter().map(|x| *x as f64).collect(), probs }
    }

    /// Mean and variance in floating point.
    pub fn mean_var(&self) -> (f64, f64) {
        let t = self.total as f64;
        let mean: f64 = self.support.iter().zip(&self.weights).map(|(x, w)| *x as f64 * *w as f64).sum::<f64>() / t;
        let var = self
            .support
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (*x as f64 - mean).powi(2) * *w as f64)
            .sum::<f64>()
            / t;
        (mean, var)
    }
}

/// Outcome of a dominance check; `witness` is an `x` where the CDF order fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCheck {
    pub holds: bool,
    pub witness: Option<f64>,
}

/// Whether `upper` first-order dominates `lower`:
/// `CDF_lower(x) >= CDF_upper(x) - 1e-12` on the union of the supports.
pub fn check_stochastic_dominance(lower: &FiniteDistribution, upper: &FiniteDistribution) -> DominanceCheck {
    let mut xs: Vec<f64> = lower.support.iter().chain(&upper.support).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let (mut f_lo, mut f_up) = (0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    for x in xs {
        while i < lower.support.len() && lower.support[i] <= x {
            f_lo += lower.probs[i];
            i += 1;
        }
        while j < upper.support.len() && upper.support[j] <= x {
            f_up += upper.probs[j];
            j += 1;
        }
        if f_lo < f_up - DOMINANCE_TOL {
            return DominanceCheck { holds: false, witness: Some(x) };
        }
    }
    DominanceCheck { holds: true, witness: None }
}

/// Exact version of [`check_stochastic_dominance`] with zero tolerance.
pub fn check_exact_dominance(lower: &ExactDistribution, upper: &ExactDistribution) -> DominanceCheck {
    let mut xs: Vec<i64> = lower.support.iter().chain(&upper.support).copied().collect();
    xs.sort_unstable();
    xs.dedup();
    let (mut f_lo, mut f_up) = (0u128, 0u128);
    let (mut i, mut j) = (0, 0);
    for x in xs {
        while i < lower.support.len() && lower.support[i] <= x {
            f_lo += lower.weights[i];
            i += 1;
        }
        while j < upper.support.len() && upper.support[j] <= x {
            f_up += upper.weights[j];
            j += 1;
        }
        // f_lo / T_lo >= f_up / T_up
        if f_lo * upper.total < f_up * lower.total {
            return DominanceCheck { holds: false, witness: Some(x as f64) };
        }
    }
    DominanceCheck { holds: true, witness: None }
}

/// One atom `(x1, x2)` of a coupling, carrying mass `prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingAtom<X, P> {
    pub x1: X,
    pub x2: X,
    pub prob: P,
}

/// Float coupling atom.
pub type FloatAtom = CouplingAtom<f64, f64>;

trait Mass: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    fn negligible(self) -> bool;
}

impl Mass for f64 {
    fn negligible(self) -> bool {
        self < 1e-15
    }
}

impl Mass for u128 {
    fn negligible(self) -> bool {
        self == 0
    }
}

/// Inverse-CDF merge of two discrete laws with equal total mass.
fn inverse_cdf_merge<X: Copy, M: Mass>(a: &[(X, M)], b: &[(X, M)]) -> Vec<(X, X, M)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut ra = a.first().map(|p| p.1);
    let mut rb = b.first().map(|p| p.1);
    while let (Some(wa), Some(wb)) = (ra, rb) {
        let w = if wa < wb { wa } else { wb };
        if !w.negligible() {
            out.push((a[i].0, b[j].0, w));
        }
        let (na, nb) = (wa - w, wb - w);
        ra = if na.negligible() {
            i += 1;
            a.get(i).map(|p| p.1)
        } else {
            Some(na)
        };
        rb = if nb.negligible() {
            j += 1;
            b.get(j).map(|p| p.1)
        } else {
            Some(nb)
        };
    }
    out
}

/// Increasing coupling of `lower` and `upper`: a joint law with those
/// marginals supported on `x1 <= x2`.
pub fn quantile_coupling(lower: &FiniteDistribution, upper: &FiniteDistribution) -> Result<Vec<FloatAtom>, MonotoneError> {
    let check = check_stochastic_dominance(lower, upper);
    if !check.holds {
        return Err(MonotoneError::NotComparable { witness: check.witness.unwrap_or(f64::NAN) });
    }
    let a: Vec<(f64, f64)> = lower.support.iter().copied().zip(lower.probs.iter().copied()).collect();
    let b: Vec<(f64, f64)> = upper.support.iter().copied().zip(upper.probs.iter().copied()).collect();
    Ok(inverse_cdf_merge(&a, &b)
        .into_iter()
        // order violations can only carry mass within the dominance tolerance
        .filter(|(x1, x2, w)| x1 <= x2 || *w > DOMINANCE_TOL)
        .map(|(x1, x2, prob)| CouplingAtom { x1, x2, prob })
        .collect())
}

/// Exact increasing coupling; masses are over the common denominator
/// `lower.total() * upper.total()`.
pub fn exact_quantile_coupling(
    lower: &ExactDistribution,
    upper: &ExactDistribution,
) -> Result<Vec<CouplingAtom<i64, u128>>, MonotoneError> {
    let check = check_exact_dominance(lower, upper);
    if !check.holds {
        return Err(MonotoneError::NotComparable { witness: check.witness.unwrap_or(f64::NAN) });
    }
    let a: Vec<(i64, u128)> = lower.support.iter().zip(&lower.weights).map(|(x, w)| (*x, w * upper.total)).collect();
    let b: Vec<(i64, u128)> = upper.support.iter().zip(&upper.weights).map(|(x, w)| (*x, w * lower.total)).collect();
    Ok(inverse_cdf_merge(&a, &b)
        .into_iter()
        .map(|(x1, x2, prob)| CouplingAtom { x1, x2, prob })
        .collect())
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Number of surjections from `m` labelled balls onto `b` labelled boxes,
/// by inclusion-exclusion.
pub fn surjections(m: u32, b: u32) -> u128 {
    let mut s: i128 = 0;
    for i in 0..=b {
        let term = binomial(b as u64, i as u64) as i128 * ((b - i) as i128).pow(m);
        if i % 2 == 0 {
            s += term;
        } else {
            s -= term;
        }
    }
    s as u128
}

/// Exact law of the number of empty boxes after `m` uniform throws into `n`
/// boxes: `P(Z = z) = C(n, z) Surj(m, n - z) / n^m`.
pub fn exact_empty_box_law(n: usize, m: usize) -> Result<ExactDistribution, MonotoneError> {
    if !(1..=8).contains(&n) || m > 12 {
        return Err(MonotoneError::OutOfDeskRange { n, m });
    }
    ExactDistribution::from_weighted(
        (0..=n).map(|z| (z as i64, binomial(n as u64, z as u64) * surjections(m as u32, (n - z) as u32))),
    )
}

/// All occupancy profiles of `m` balls in `n` boxes with their multiplicity
/// among the `n^m` equally likely throws. The profile `z` has length `m + 1`
/// and `z[j]` counts the boxes holding exactly `j` balls.
pub fn occupancy_profile_law(n: usize, m: usize) -> Result<Vec<(Vec<u32>, u128)>, MonotoneError> {
    if n == 0 || binomial((m + n - 1) as u64, (n - 1) as u64) > MAX_ENUMERATION {
        return Err(MonotoneError::OutOfDeskRange { n, m });
    }
    let mut acc: BTreeMap<Vec<u32>, u128> = BTreeMap::new();
    let mut profile = vec![0u32; m + 1];
    fn recurse(
        box_idx: usize,
        n: usize,
        remaining: usize,
        weight: u128,
        profile: &mut Vec<u32>,
        acc: &mut BTreeMap<Vec<u32>, u128>,
    ) {
        if box_idx == n - 1 {
            profile[remaining] += 1;
            *acc.entry(profile.clone()).or_insert(0) += weight;
            profile[remaining] -= 1;
            return;
        }
        for c in 0..=remaining {
            profile[c] += 1;
            let w = weight * binomial(remaining as u64, c as u64);
            recurse(box_idx + 1, n, remaining - c, w, profile, acc);
            profile[c] -= 1;
        }
    }
    recurse(0, n, m, 1, &mut profile, &mut acc);
    Ok(acc.into_iter().collect())
}

/// Visits every labelled graph on `n <= 7` vertices with its edge count and
/// degree sequence.
pub fn for_each_graph<F: FnMut(usize, &[u32])>(n: usize, mut f: F) -> Result<(), MonotoneError> {
    if n > 7 {
        return Err(MonotoneError::OutOfDeskRange { n, m: 0 });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
    let mut deg = vec![0u32; n];
    for mask in 0u64..(1u64 << pairs.len()) {
        deg.iter_mut().for_each(|d| *d = 0);
        for (e, (u, v)) in pairs.iter().enumerate() {
            if mask >> e & 1 == 1 {
                deg[*u] += 1;
                deg[*v] += 1;
            }
        }
        f(mask.count_ones() as usize, &deg);
    }
    Ok(())
}

/// Exact law, under `G(n,m)`, of a statistic of the degree sequence, for
/// every `m = 0..=C(n,2)`.
pub fn gnm_statistic_laws<F: Fn(&[u32]) -> i64>(n: usize, stat: F) -> Result<Vec<ExactDistribution>, MonotoneError> {
    let total_pairs = n * n.saturating_sub(1) / 2;
    let mut buckets: Vec<BTreeMap<i64, u128>> = vec![BTreeMap::new(); total_pairs + 1];
    for_each_graph(n, |m, deg| {
        *buckets[m].entry(stat(deg)).or_insert(0) += 1;
    })?;
    buckets.into_iter().map(ExactDistribution::from_weighted).collect()
}

/// `(z_0, z_0 + z_1, .., z_0 + .. + z_J)`.
pub fn cumulative_transform<T: Copy + Add<Output = T>>(z: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(z.len());
    for (i, v) in z.iter().enumerate() {
        out.push(if i == 0 { *v } else { out[i - 1] + *v });
    }
    out
}

/// Inverse of [`cumulative_transform`].
pub fn difference_transform<T: Copy + Sub<Output = T>>(s: &[T]) -> Vec<T> {
    s.iter().enumerate().map(|(i, v)| if i == 0 { *v } else { *v - s[i - 1] }).collect()
}

/// Lower-triangular all-ones matrix representing [`cumulative_transform`].
pub fn cumulative_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if j <= i { 1.0 } else { 0.0 })
}

/// Outcome of [`monotonicity_suite`]. A failure names the family and the
/// pair of consecutive `m` values involved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteResult {
    pub pairs_checked: usize,
    pub dominance_failures: Vec<String>,
    pub coupling_atoms: usize,
    pub coupling_failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.dominance_failures.is_empty() && self.coupling_failures.is_empty()
    }
}

/// Checks that a family of laws indexed by `m` decreases stochastically,
/// and that every consecutive pair admits an ordered coupling with the
/// right marginals.
fn check_decreasing(label: &str, laws: &[ExactDistribution], out: &mut SuiteResult) {
    for (m, pair) in laws.windows(2).enumerate() {
        let (upper, lower) = (&pair[0], &pair[1]);
        out.pairs_checked += 1;
        let tag = format!("{label}, m = {m} -> {}", m + 1);
        if !check_exact_dominance(lower, upper).holds {
            out.dominance_failures.push(tag);
            continue;
        }
        let atoms = match exact_quantile_coupling(lower, upper) {
            Ok(a) => a,
            Err(e) => {
                out.coupling_failures.push(format!("{tag}: {e}"));
                continue;
            }
        };
        out.coupling_atoms += atoms.len();
        let ordered = atoms.iter().all(|a| a.x1 <= a.x2);
        let marginal = |law: &ExactDistribution, other: u128, first: bool| {
            law.support.iter().zip(&law.weights).all(|(x, w)| {
                let mass: u128 = atoms.iter().filter(|a| if first { a.x1 == *x } else { a.x2 == *x }).map(|a| a.prob).sum();
                mass == w * other
            })
        };
        if !ordered || !marginal(lower, upper.total, true) || !marginal(upper, lower.total, false) {
            out.coupling_failures.push(tag);
        }
    }
}

/// Exact monotonicity checks at desk scale:
///
/// * the number of empty boxes, for `n <= n_max` boxes and `m <= m_max` balls;
/// * the number of boxes holding at most `j` balls, same range, every `j`;
/// * the number of vertices of degree at most `j` in `G(graph_n, m)`, all `m`
///   and `j`.
pub fn monotonicity_suite(n_max: usize, m_max: usize, graph_n: usize) -> Result<SuiteResult, MonotoneError> {
    let mut out = SuiteResult::default();
    for n in 1..=n_max {
        let laws = (0..=m_max).map(|m| exact_empty_box_law(n, m)).collect::<Result<Vec<_>, _>>()?;
        check_decreasing(&format!("empty boxes, n = {n}"), &laws, &mut out);
        let profiles = (0..=m_max).map(|m| occupancy_profile_law(n, m)).collect::<Result<Vec<_>, _>>()?;
        for j in 0..=m_max {
            let laws = profiles
                .iter()
                .map(|law| {
                    ExactDistribution::from_weighted(
                        law.iter().map(|(z, w)| (z.iter().take(j + 1).map(|c| *c as i64).sum::<i64>(), *w)),
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            check_decreasing(&format!("boxes with at most {j} balls, n = {n}"), &laws, &mut out);
        }
    }
    for j in 0..graph_n.max(1) {
        let laws = gnm_statistic_laws(graph_n, |deg| deg.iter().filter(|d| **d as usize <= j).count() as i64)?;
        check_decreasing(&format!("vertices of degree at most {j}, n = {graph_n}"), &laws, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_box_small_laws() {
        let d = exact_empty_box_law(2, 1).unwrap();
        assert_eq!(d.prob_of(1), (2, 2));
        let d = exact_empty_box_law(2, 2).unwrap();
        assert_eq!(d.prob_of(1), (2, 4));
        assert_eq!(d.prob_of(0), (2, 4));
        let d = exact_empty_box_law(3, 2).unwrap();
        assert_eq!(d.prob_of(1), (6, 9));
        assert_eq!(d.prob_of(2), (3, 9));
        assert!(exact_empty_box_law(9, 2).is_err());
        assert!(exact_empty_box_law(3, 13).is_err());
        assert!(exact_empty_box_law(0, 1).is_err());
    }

    #[test]
    fn empty_box_law_matches_brute_force() {
        for n in 1..=4usize {
            for m in 0..=6usize {
                let mut counts = vec![0u128; n + 1];
                let outcomes = n.pow(m as u32);
                for code in 0..outcomes {
                    let mut occupied = vec![false; n];
                    let mut c = code;
                    for _ in 0..m {
                        occupied[c % n] = true;
                        c /= n;
                    }
                    counts[occupied.iter().filter(|o| !**o).count()] += 1;
                }
                let law = exact_empty_box_law(n, m).unwrap();
                assert_eq!(law.total(), outcomes as u128);
                for z in 0..=n {
                    assert_eq!(law.prob_of(z as i64).0, counts[z], "n={n} m={m} z={z}");
                }
            }
        }
    }

    #[test]
    fn profile_enumeration_agrees_with_surjections() {
        for n in 1..=8 {
            for m in 0..=12 {
                let profiles = occupancy_profile_law(n, m).unwrap();
                let total: u128 = profiles.iter().map(|p| p.1).sum();
                assert_eq!(total, (n as u128).pow(m as u32));
                let law = ExactDistribution::from_weighted(profiles.iter().map(|(z, w)| (z[0] as i64, *w))).unwrap();
                assert_eq!(law, exact_empty_box_law(n, m).unwrap());
            }
        }
    }

    #[test]
    fn dominance_basics() {
        let a = FiniteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(check_stochastic_dominance(&a, &a).holds);
        let p0 = FiniteDistribution::point_mass(0.0);
        let p1 = FiniteDistribution::point_mass(1.0);
        assert!(check_stochastic_dominance(&p0, &p1).holds);
        let back = check_stochastic_dominance(&p1, &p0);
        assert!(!back.holds);
        assert_eq!(back.witness, Some(0.0));
    }

    #[test]
    fn empty_boxes_decrease_with_balls() {
        for m in 0..8 {
            let now = exact_empty_box_law(4, m).unwrap();
            let next = exact_empty_box_law(4, m + 1).unwrap();
            assert!(check_exact_dominance(&next, &now).holds);
            assert!(check_exact_dominance(&now.negated(), &next.negated()).holds);
            assert!(check_stochastic_dominance(&next.to_finite(), &now.to_finite()).holds);
        }
    }

    #[test]
    fn couplings() {
        let a = FiniteDistribution::new(vec![0.0, 2.0, 3.0], vec![0.2, 0.3, 0.5]).unwrap();
        let c = quantile_coupling(&a, &a).unwrap();
        assert!(c.iter().all(|t| t.x1 == t.x2));
        let c = quantile_coupling(&FiniteDistribution::point_mass(0.0), &FiniteDistribution::point_mass(1.0)).unwrap();
        assert_eq!(c, vec![CouplingAtom { x1: 0.0, x2: 1.0, prob: 1.0 }]);
        assert!(matches!(
            quantile_coupling(&FiniteDistribution::point_mass(1.0), &FiniteDistribution::point_mass(0.0)),
            Err(MonotoneError::NotComparable { .. })
        ));

        let lower = exact_empty_box_law(4, 3).unwrap();
        let upper = exact_empty_box_law(4, 2).unwrap();
        let atoms = exact_quantile_coupling(&lower, &upper).unwrap();
        let denom = lower.total() * upper.total();
        assert_eq!(atoms.iter().map(|a| a.prob).sum::<u128>(), denom);
        for x in lower.support() {
            let s: u128 = atoms.iter().filter(|a| a.x1 == *x).map(|a| a.prob).sum();
            assert_eq!(s, lower.prob_of(*x).0 * upper.total());
        }
        for x in upper.support() {
            let s: u128 = atoms.iter().filter(|a| a.x2 == *x).map(|a| a.prob).sum();
            assert_eq!(s, upper.prob_of(*x).0 * lower.total());
        }
        assert!(atoms.iter().all(|a| a.x1 <= a.x2));

        let fl = quantile_coupling(&lower.to_finite(), &upper.to_finite()).unwrap();
        assert!(fl.iter().all(|a| a.x1 <= a.x2));
        for x in lower.support() {
            let s: f64 = fl.iter().filter(|a| a.x1 == *x as f64).map(|a| a.prob).sum();
            assert!((s - lower.to_finite().prob_of(*x as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn cumulative_examples() {
        assert_eq!(cumulative_transform(&[1.0, 2.0, 3.0]), vec![1.0, 3.0, 6.0]);
        assert_eq!(cumulative_transform(&[0.0; 4]), vec![0.0; 4]);
        assert_eq!(difference_transform(&cumulative_transform(&[4i64, -2, 7])), vec![4, -2, 7]);
        let t = cumulative_matrix(3);
        let v = nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!((t * v).as_slice(), &[1.0, 3.0, 6.0]);
    }

    #[test]
    fn graph_enumeration_counts() {
        let laws = gnm_statistic_laws(4, |d| d.iter().filter(|x| **x == 0).count() as i64).unwrap();
        assert_eq!(laws.len(), 7);
        let totals: Vec<u128> = laws.iter().map(|l| l.total()).collect();
        assert_eq!(totals, vec![1, 6, 15, 20, 15, 6, 1]);
        assert!(for_each_graph(8, |_, _| {}).is_err());
    }

    fn arb_dist() -> impl Strategy<Value = ExactDistribution> {
        prop::collection::vec((-4i64..5, 1u128..20), 1..6)
            .prop_map(|items| ExactDistribution::from_weighted(items).unwrap())
    }

    proptest! {
        #[test]
        fn dominance_is_transitive(a in arb_dist(), b in arb_dist(), c in arb_dist()) {
            if check_exact_dominance(&a, &b).holds && check_exact_dominance(&b, &c).holds {
                prop_assert!(check_exact_dominance(&a, &c).holds);
            }
            let (fa, fb, fc) = (a.to_finite(), b.to_finite(), c.to_finite());
            if check_stochastic_dominance(&fa, &fb).holds && check_stochastic_dominance(&fb, &fc).holds {
                prop_assert!(check_stochastic_dominance(&fa, &fc).holds);
            }
        }

        #[test]
        fn coupling_marginals(a in arb_dist(), b in arb_dist()) {
            if let Ok(atoms) = exact_quantile_coupling(&a, &b) {
                for x in a.support() {
                    let s: u128 = atoms.iter().filter(|t| t.x1 == *x).map(|t| t.prob).sum();
                    prop_assert_eq!(s, a.prob_of(*x).0 * b.total());
                }
                prop_assert!(atoms.iter().all(|t| t.x1 <= t.x2));
            } else {
                prop_assert!(!check_exact_dominance(&a, &b).holds);
            }
        }

        #[test]
        fn cumulative_round_trip(v in prop::collection::vec(-1000i64..1000, 0..20)) {
            prop_assert_eq!(difference_transform(&cumulative_transform(&v)), v);
        }
    }

    #[test]
    fn desk_scale_suite() {
        let r = monotonicity_suite(5, 8, 4).unwrap();
        assert!(r.passed(), "{:?}", r);
        // 5 * 8 empty-box pairs, 5 * 9 * 8 cumulative pairs, 4 * 6 degree pairs
        assert_eq!(r.pairs_checked, 40 + 360 + 24);
        assert!(r.coupling_atoms > r.pairs_checked);
    }

    #[test]
    fn suite_flags_increasing_family() {
        let up = ExactDistribution::from_weighted([(0, 1), (1, 1)]).unwrap();
        let down = ExactDistribution::from_weighted([(0, 3), (1, 1)]).unwrap();
        let mut r = SuiteResult::default();
        check_decreasing("toy", &[down, up], &mut r);
        assert_eq!(r.dominance_failures.len(), 1);
    }
}
