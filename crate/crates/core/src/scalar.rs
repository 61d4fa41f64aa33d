//! Scalar abstractions shared by the numeric modules.
//!
//! Floating-point code is written against [`Real`]; exact arithmetic (class
//! weights, report rounding) uses [`num_rational::Ratio`] through
//! [`FromCount`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout feature extraction and modelling.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Conversion from a non-negative count into a number type, exact for
/// rationals.
pub trait FromCount {
    fn from_count(n: u64) -> Self;
}

impl FromCount for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }
}

impl FromCount for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
}

impl FromCount for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }
}

impl FromCount for Ratio<i128> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(i128::from(n))
    }
}

/// Rounds `numer / denom` to `decimals` places, ties toward zero, and
/// returns the scaled integer (e.g. 2799 for 27.99 at two places).
pub fn round_half_toward_zero(value: &Ratio<i128>, decimals: u32) -> i128 {
    let scale = 10i128.pow(decimals);
    let scaled = value * Ratio::from_integer(scale);
    let (n, d) = (*scaled.numer(), *scaled.denom());
    let (q, r) = (n.abs() / d, n.abs() % d);
    let magnitude = if 2 * r > d { q + 1 } else { q };
    if n < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Formats a scaled integer produced by [`round_half_toward_zero`].
pub fn format_scaled(scaled: i128, decimals: u32, force_sign: bool) -> String {
    let scale = 10i128.pow(decimals);
    let sign = if scaled < 0 {
        "-"
    } else if force_sign {
        "+"
    } else {
        ""
    };
    let abs = scaled.abs();
    if decimals == 0 {
        return format!("{sign}{abs}");
    }
    format!(
        "{sign}{}.{:0width$}",
        abs / scale,
        abs % scale,
        width = decimals as usize
    )
}
