//! Brute-force count of circular subsets containing a run.
//!
//! Deliberately shares no code with the closed form: subsets are walked as
//! bitmasks over positions `0..n` on a circle.

use crate::error::{Error, Result};

/// Default largest circle the oracle will enumerate.
pub const ORACLE_MAX_N: usize = 24;

/// Number of `k`-subsets of `n` circular positions holding at least one run
/// of `m` cyclically consecutive positions.
pub fn cyc_oracle(n: usize, k: usize, m: usize) -> Result<u64> {
    cyc_oracle_capped(n, k, m, ORACLE_MAX_N)
}

pub fn cyc_oracle_capped(n: usize, k: usize, m: usize, max_n: usize) -> Result<u64> {
    if m == 0 || m > k || k > n {
        return Err(Error::Domain(format!(
            "cyc oracle needs 1 <= m <= k <= n, got n={n}, k={k}, m={m}"
        )));
    }
    if n > max_n || n >= 64 {
        return Err(Error::TooLarge {
            what: "circular subsets".into(),
            size: 1u128 << n.min(127),
            cap: 1u128 << max_n.min(127),
        });
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let run: u64 = (1u64 << m) - 1;
    let rotate = |mask: u64, by: usize| -> u64 {
        if by == 0 {
            mask
        } else {
            ((mask << by) | (mask >> (n - by))) & full
        }
    };
    let mut count = 0u64;
    // Gosper's hack walks every mask with exactly k bits set.
    let mut mask: u64 = if k == 0 { 0 } else { (1u64 << k) - 1 };
    loop {
        if (0..n).any(|start| {
            let window = rotate(run, start);
            mask & window == window
        }) {
            count += 1;
        }
        if k == 0 || k == n {
            break;
        }
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        let next = (((ripple ^ mask) >> 2) / low) | ripple;
        if next > full {
            break;
        }
        mask = next;
    }
    Ok(count)
}
