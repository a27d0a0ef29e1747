//! Closed-form count of `k`-subsets of an `n`-circle that contain a run of
//! `m` cyclically consecutive elements.
//!
//! The subsets split by whether the first and last labels are members:
//! `k1` (1 in, n out), `k2` (1 out, n in), `k3` (both out) and the
//! both-in case, which is further split into `k41` (the run crossing the
//! seam is shorter than `m`, some inner run reaches `m`) and `k42` (the
//! seam run itself reaches `m`). Each part is a sum over the number of
//! member runs `r` of (gap compositions) x (run compositions with a long
//! run), the latter by inclusion-exclusion.

use super::binom;
use crate::error::{Error, Result};

/// Per-part sizes of the circular run count; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycBreakdown {
    pub k1: u64,
    pub k2: u64,
    pub k3: u64,
    pub k41: u64,
    pub k42: u64,
    pub total: u64,
}

fn b(n: i64, k: i64) -> Result<i128> {
    binom(n, k).map(i128::from)
}

fn overflow() -> Error {
    Error::Overflow("cyc closed form".into())
}

fn add(acc: i128, x: i128) -> Result<i128> {
    acc.checked_add(x).ok_or_else(overflow)
}

fn mul(a: i128, x: i128) -> Result<i128> {
    a.checked_mul(x).ok_or_else(overflow)
}

fn sign(j: i64) -> i128 {
    if j % 2 == 1 {
        1
    } else {
        -1
    }
}

fn to_count(x: i128, part: &str) -> Result<u64> {
    u64::try_from(x).map_err(|_| {
        Error::Overflow(format!("cyc part {part} left the non-negative u64 range ({x})"))
    })
}

/// Compositions of `k` into `r` positive parts with at least one part `>= m`.
fn long_run_compositions(k: i64, r: i64, m: i64) -> Result<i128> {
    let mut acc = 0i128;
    for l in 1..=r {
        let term = mul(b(r, l)?, b(k - l * (m - 1) - 1, r - 1)?)?;
        acc = add(acc, sign(l) * term)?;
    }
    Ok(acc)
}

/// Closed form for `cyc(n, k, m)` with its five-part breakdown.
///
/// Valid for `1 <= m <= k < n`. The degenerate full circle `k == n` is
/// accepted as well and counts the single subset `[1..n]` (placed in
/// `k42`, since both endpoints are members); the closed form itself does
/// not cover that case.
pub fn cyc_closed_form(n: usize, k: usize, m: usize) -> Result<CycBreakdown> {
    if m == 0 || m > k || k > n {
        return Err(Error::Domain(format!(
            "cyc(n, k, m) needs 1 <= m <= k < n, got n={n}, k={k}, m={m}"
        )));
    }
    if k == n {
        return Ok(CycBreakdown {
            k1: 0,
            k2: 0,
            k3: 0,
            k41: 0,
            k42: 1,
            total: 1,
        });
    }
    let (n, k, m) = (n as i64, k as i64, m as i64);
    let gaps = n - k;

    // Runs alternate with gaps; 1 in and n out means r runs and r gaps.
    let mut k1 = 0i128;
    let mut k3 = 0i128;
    for r in 1..=k {
        let runs = long_run_compositions(k, r, m)?;
        k1 = add(k1, mul(b(gaps - 1, r - 1)?, runs)?)?;
        k3 = add(k3, mul(b(gaps - 1, r)?, runs)?)?;
    }

    // Both endpoints in: r runs, r-1 gaps, the first and last runs join
    // across the seam into one run of length s.
    let mut k41 = 0i128;
    let mut k42 = 0i128;
    for r in 3..=k {
        let gap_ways = b(gaps - 1, r - 2)?;
        let mut short_seam = 0i128;
        for s in 2..m {
            let mut inner = 0i128;
            for j in 1..=r - 2 {
                let term = mul(b(r - 2, j)?, b(k - s - j * (m - 1) - 1, r - 3)?)?;
                inner = add(inner, sign(j) * term)?;
            }
            short_seam = add(short_seam, mul(s as i128 - 1, inner)?)?;
        }
        k41 = add(k41, mul(gap_ways, short_seam)?)?;

        let mut long_seam = 0i128;
        for s in m..=k {
            long_seam = add(long_seam, mul(s as i128 - 1, b(k - s - 1, r - 3)?)?)?;
        }
        k42 = add(k42, mul(gap_ways, long_seam)?)?;
    }
    // r == 2: a single gap, and the seam run is all k members.
    k42 = add(k42, (k - 1) as i128)?;

    let k1 = to_count(k1, "k1")?;
    let k3 = to_count(k3, "k3")?;
    let k41 = to_count(k41, "k41")?;
    let k42 = to_count(k42, "k42")?;
    let total = [k1, k3, k41, k42]
        .iter()
        .try_fold(k1, |acc, &x| acc.checked_add(x))
        .ok_or_else(overflow)?;
    Ok(CycBreakdown {
        k1,
        k2: k1,
        k3,
        k41,
        k42,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_anchors() {
        assert_eq!(cyc_closed_form(8, 4, 2).unwrap().total, 68);
        assert_eq!(cyc_closed_form(8, 5, 2).unwrap().total, 56);
    }

    // Frozen from the brute-force oracle before the closed form existed.
    #[test]
    fn six_three_two_matches_enumeration() {
        // 20 triples on a 6-circle, 2 of them ({1,3,5}, {2,4,6}) have no
        // adjacent pair.
        assert_eq!(cyc_closed_form(6, 3, 2).unwrap().total, 18);
    }

    #[test]
    fn run_equal_to_size_counts_arcs() {
        for n in 2..=12 {
            for k in 1..n {
                assert_eq!(cyc_closed_form(n, k, k).unwrap().total, n as u64);
            }
        }
    }

    #[test]
    fn full_circle_extension() {
        let b = cyc_closed_form(5, 5, 2).unwrap();
        assert_eq!(b.total, 1);
        assert_eq!(b.k42, 1);
    }

    #[test]
    fn breakdown_sums_and_k1_equals_k2() {
        let b = cyc_closed_form(10, 6, 3).unwrap();
        assert_eq!(b.k1, b.k2);
        assert_eq!(b.total, b.k1 + b.k2 + b.k3 + b.k41 + b.k42);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(cyc_closed_form(8, 2, 3), Err(Error::Domain(_))));
        assert!(matches!(cyc_closed_form(8, 9, 3), Err(Error::Domain(_))));
        assert!(matches!(cyc_closed_form(8, 3, 0), Err(Error::Domain(_))));
    }
}
