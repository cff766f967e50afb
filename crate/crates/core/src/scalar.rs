//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. Covers everything the crate needs from
/// a scalar: IEEE arithmetic, the transcendentals behind the activations,
/// and conversion from sample counts.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Deviation of `a` from `b`: relative for magnitudes above one,
    /// absolute below.
    fn deviation(a: Self, b: Self) -> Self {
        let scale = a.abs().max(b.abs()).max(Self::one());
        (a - b).abs() / scale
    }

    /// Exact-enough conversion from a count (sample or component numbers).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
