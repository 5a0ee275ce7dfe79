//! Exact finite-`n` samplers for allocations, random graphs and spacings.
//!
//! Samplers keep only per-box or per-vertex counts and fold them into
//! truncated count profiles. Counts above the truncation index land in a
//! tail bucket that also tracks its mass, so the conservation identities
//! hold exactly on every draw.

mod alloc;
mod dump;
mod graph;
mod spacings;

pub use alloc::{allocation_box_counts, poissonized_box_counts, sample_allocation, sample_poissonized_allocation};
pub use dump::{read_count_rows, write_count_rows, CountTable};
pub use graph::{
    degree_counts_from_edges, edge_from_index, gnm_degrees, gnp_degrees, sample_gnm, sample_gnp, DegreeSample,
};
pub use spacings::{exceedance_count, sample_spacings, SpacingsSample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default truncation index for count profiles.
pub const DEFAULT_TAIL_INDEX: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("m = {m} exceeds the {max} available vertex pairs")]
    TooManyEdges { m: u64, max: u64 },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
}

/// Truncated histogram of per-cell counts.
///
/// `counts[j]` is the number of cells holding exactly `j` items for
/// `j <= tail_index`; cells above that are summarized by `tail_cells` and
/// `tail_items`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountProfile {
    pub counts: Vec<u64>,
    pub tail_cells: u64,
    pub tail_items: u64,
}

impl CountProfile {
    pub fn from_cell_counts(cells: &[u32], tail_index: usize) -> Self {
        let mut counts = vec![0u64; tail_index + 1];
        let (mut tail_cells, mut tail_items) = (0u64, 0u64);
        for &c in cells {
            let c = c as usize;
            if c <= tail_index {
                counts[c] += 1;
            } else {
                tail_cells += 1;
                tail_items += c as u64;
            }
        }
        Self { counts, tail_cells, tail_items }
    }

    pub fn tail_index(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn cells(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.tail_cells
    }

    /// `sum_j j * counts[j]` plus the items held by tail cells.
    pub fn items(&self) -> u64 {
        self.counts.iter().enumerate().map(|(j, c)| j as u64 * c).sum::<u64>() + self.tail_items
    }
}

/// Result of throwing `m` balls into `n` boxes; `profile.counts[j]` is the
/// number of boxes with exactly `j` balls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyProfile {
    pub n: u64,
    pub m: u64,
    pub profile: CountProfile,
}

impl OccupancyProfile {
    pub fn from_box_counts(counts: &[u32], tail_index: usize) -> Self {
        let profile = CountProfile::from_cell_counts(counts, tail_index);
        Self { n: counts.len() as u64, m: profile.items(), profile }
    }

    pub fn z(&self, j: usize) -> u64 {
        self.profile.counts.get(j).copied().unwrap_or(0)
    }

    pub fn is_conserved(&self) -> bool {
        self.profile.cells() == self.n && self.profile.items() == self.m
    }
}

/// Degree counts of a graph; `profile.counts[k]` is the number of vertices
/// of degree `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeCounts {
    pub n: u64,
    pub m: u64,
    pub profile: CountProfile,
}

impl DegreeCounts {
    pub fn from_degrees(degrees: &[u32], m: u64, tail_index: usize) -> Self {
        Self { n: degrees.len() as u64, m, profile: CountProfile::from_cell_counts(degrees, tail_index) }
    }

    pub fn count(&self, k: usize) -> u64 {
        self.profile.counts.get(k).copied().unwrap_or(0)
    }

    pub fn is_conserved(&self) -> bool {
        self.profile.cells() == self.n && self.profile.items() == 2 * self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_tail_accounting() {
        let p = CountProfile::from_cell_counts(&[0, 3, 1, 9, 0, 5], 3);
        assert_eq!(p.counts, vec![2, 1, 0, 1]);
        assert_eq!((p.tail_cells, p.tail_items), (2, 14));
        assert_eq!(p.cells(), 6);
        assert_eq!(p.items(), 18);
    }

    #[test]
    fn labels_do_not_matter() {
        let counts = [4u32, 0, 2, 2, 1, 0, 7];
        let mut permuted = counts;
        permuted.reverse();
        permuted.swap(1, 4);
        assert_eq!(OccupancyProfile::from_box_counts(&counts, 5), OccupancyProfile::from_box_counts(&permuted, 5));
    }
}
