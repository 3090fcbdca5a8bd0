//! Contiguous balanced partition of the retained frequencies into groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// G contiguous groups covering n frequencies, sizes differing by at most
/// one (the first `n % G` groups get the extra element).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    n: usize,
    bounds: Vec<usize>,
}

impl GroupPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_groups(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Split indices, length G + 1, starting at 0 and ending at n.
    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn range(&self, g: usize) -> std::ops::Range<usize> {
        self.bounds[g]..self.bounds[g + 1]
    }

    pub fn group_size(&self, g: usize) -> usize {
        self.bounds[g + 1] - self.bounds[g]
    }
}

/// Deterministic contiguous balanced partition of `n` items into `g` groups.
pub fn build_groups(n: usize, g: usize) -> Result<GroupPartition> {
    if g == 0 || g > n {
        return Err(Error::Partition(format!(
            "cannot split {n} frequencies into {g} groups"
        )));
    }
    let base = n / g;
    let extra = n % g;
    let mut bounds = Vec::with_capacity(g + 1);
    bounds.push(0);
    let mut pos = 0;
    for i in 0..g {
        pos += base + usize::from(i < extra);
        bounds.push(pos);
    }
    debug_assert_eq!(pos, n);
    Ok(GroupPartition { n, bounds })
}
