//! Scalar abstraction for rate arithmetic.
//!
//! Every rate in this crate is a ratio of binomial counts times a finite
//! geometric sum, so any field with conversions from integers works. Exact
//! rationals are the default; `f64` is useful for plotting grids.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("every count is representable")
    }

    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive> Scalar for T {}
