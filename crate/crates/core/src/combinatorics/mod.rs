//! Subsets of `[1..n]` in canonical (lexicographic) order, binomial
//! coefficients with overflow checks, and the cyclic run count.

mod cyc;
mod oracle;

use std::fmt;

use crate::error::{Error, Result};

pub use cyc::{cyc_closed_form, CycBreakdown};
pub use oracle::{cyc_oracle, cyc_oracle_capped, ORACLE_MAX_N};

/// Binomial coefficient with the zero convention used throughout:
/// `binom(n, k) == 0` whenever `k < 0`, `n < 0` or `k > n`.
pub fn binom(n: i64, k: i64) -> Result<u64> {
    if n < 0 || k < 0 || k > n {
        return Ok(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::Overflow(format!("binom({n}, {k})")))?
            / (i + 1);
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("binom({n}, {k})")))
}

/// `binom` for arguments already known to be in range.
pub(crate) fn choose(n: usize, k: usize) -> Result<u64> {
    binom(n as i64, k as i64)
}

/// A subset of the ground set `[1..ground_size]`, members strictly increasing.
///
/// Ordering compares member lists lexicographically, which is the canonical
/// order used for subfile, user and transmission indexing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetId {
    members: Vec<usize>,
    ground_size: usize,
}

impl SubsetId {
    pub fn new(members: Vec<usize>, ground_size: usize) -> Result<Self> {
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(format!(
                "subset members must be strictly increasing, got {members:?}"
            )));
        }
        if let Some(&bad) = members.iter().find(|&&m| m == 0 || m > ground_size) {
            return Err(Error::Domain(format!(
                "subset member {bad} outside [1..{ground_size}]"
            )));
        }
        Ok(Self {
            members,
            ground_size,
        })
    }

    /// Build from unsorted members; duplicates are rejected.
    pub fn from_unsorted(mut members: Vec<usize>, ground_size: usize) -> Result<Self> {
        members.sort_unstable();
        Self::new(members, ground_size)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetId) -> bool {
        self.members.iter().all(|m| other.contains(*m))
    }

    pub fn is_disjoint(&self, other: &SubsetId) -> bool {
        !self.members.iter().any(|m| other.contains(*m))
    }

    pub fn union(&self, other: &SubsetId) -> SubsetId {
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        members.sort_unstable();
        members.dedup();
        SubsetId {
            members,
            ground_size: self.ground_size.max(other.ground_size),
        }
    }

    pub fn difference(&self, other: &SubsetId) -> SubsetId {
        SubsetId {
            members: self
                .members
                .iter()
                .copied()
                .filter(|m| !other.contains(*m))
                .collect(),
            ground_size: self.ground_size,
        }
    }

    /// All `k`-subsets of this subset, in canonical order.
    pub fn subsets_of_size(&self, k: usize) -> Vec<SubsetId> {
        enumerate_subsets(self.len(), k)
            .into_iter()
            .map(|local| SubsetId {
                members: local.members.iter().map(|&i| self.members[i - 1]).collect(),
                ground_size: self.ground_size,
            })
            .collect()
    }
}

impl fmt::Debug for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// All `k`-subsets of `[1..n]` in lexicographic order. Empty when `k > n`.
pub fn enumerate_subsets(n: usize, k: usize) -> Vec<SubsetId> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=k).collect();
    loop {
        out.push(SubsetId {
            members: current.clone(),
            ground_size: n,
        });
        // Rightmost position that can still be advanced.
        let Some(pos) = (0..k).rev().find(|&i| current[i] < n - k + i + 1) else {
            break;
        };
        current[pos] += 1;
        for i in pos + 1..k {
            current[i] = current[i - 1] + 1;
        }
    }
    out
}
