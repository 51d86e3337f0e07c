// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by the cost, morph, and loss modules.
//!
//! Cycle counts and resource tallies are always integers. Anything measured in
//! seconds, milliwatts, or probability mass goes through [`Scalar`] so the same
//! code runs in `f32` and `f64`. The one place an exact rational is needed (the
//! half-cycle porch term of the streaming core) uses [`Cycles`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Exact cycle count, possibly fractional.
pub type Cycles = num_rational::Ratio<u64>;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; panics only for types that cannot hold finite `f64`s.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("scalar conversion from f64")
    }

    fn of_u64(v: u64) -> Self {
        Self::from_u64(v).expect("scalar conversion from u64")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}

/// Ceiling of an exact cycle count.
pub fn ceil_cycles(c: Cycles) -> u64 {
    c.ceil().to_integer()
}

/// `ceil(a / b)` for positive integers.
pub(crate) fn div_ceil(a: u64, b: u64) -> u64 {
    debug_assert!(b > 0);
    a.div_ceil(b)
}

/// `ceil(log2(n))` for `n >= 1`.
pub(crate) fn ceil_log2(n: u64) -> u64 {
    debug_assert!(n >= 1);
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}
