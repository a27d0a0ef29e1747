//! Multi-access cache-aided multi-user private information retrieval.
//!
//! The crate executes the full scheme on real bytes: files are split into
//! subfiles indexed by `t`-subsets of the cache nodes, cached uncoded, and
//! delivered through per-server broadcasts that XOR together one
//! capacity-achieving single-user PIR answer per user. Every user decodes
//! its demand bit-exactly while each server's query stays independent of
//! the demand vector.
//!
//! Modules:
//! - [`combinatorics`]: canonical subset enumeration, binomials, and the
//!   cyclic run count `cyc(n, k, m)` with a brute-force oracle.
//! - [`pir`]: the single-user PIR primitive (queries, answers, decoding).
//! - [`placement`]: file library, cache filling, user access structures.
//! - [`protocol`]: coordinator, servers and users of the multi-user scheme.
//! - [`cyclic`]: reduced transmission plans for cyclic wraparound access.
//! - [`privacy`]: exact and statistical audits of server query views.
//! - [`rates`]: closed-form rates, envelopes and comparison tables.
//!
//! Rate arithmetic is generic over [`Scalar`]; [`Exact`] is the rational
//! type used for every identity check and [`Approx`] is plain `f64`.

pub mod combinatorics;
pub mod cyclic;
pub mod error;
pub mod pir;
pub mod placement;
pub mod privacy;
pub mod protocol;
pub mod rates;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scalar used for measured and closed-form rates.
pub type Exact = num_rational::BigRational;

/// Floating point scalar for approximate evaluation.
pub type Approx = f64;

/// Closed-form rate point with exact values.
pub type ExactRatePoint = rates::RatePoint<Exact>;

/// Render an exact rational as `p/q` (or `p` when integral).
pub fn fmt_exact(value: &Exact) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering with a fixed number of digits, stable across runs.
pub fn fmt_decimal(value: &Exact, digits: usize) -> String {
    format!("{:.*}", digits, value.approx())
}
