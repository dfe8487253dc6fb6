//! Scalar abstraction for score arithmetic.
//!
//! Every log-probability, weight, and metric in this crate is generic over a
//! floating-point scalar so the same code runs at `f32` or `f64`. Concrete
//! aliases live at the crate root; `f64` is the default throughout the CLI.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for log-probabilities and scores.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal (weights, table entries).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// Natural log of a probability; `p = 0` maps to the negative-infinity
/// sentinel, which poisons any sum it enters.
pub fn ln_prob<S: Scalar>(p: S) -> S {
    if p <= S::zero() {
        S::neg_infinity()
    } else {
        p.ln()
    }
}

/// Descending order on scores. NaN sorts last (worst); the decoder never
/// produces NaN on its own but stub scorers in tests may.
pub fn cmp_score_desc<S: Scalar>(a: S, b: S) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => b.partial_cmp(&a).unwrap(),
    }
}

/// Ascending total order used when configurations are sorted for output.
pub fn cmp_score_asc<S: Scalar>(a: S, b: S) -> Ordering {
    cmp_score_desc(b, a)
}
