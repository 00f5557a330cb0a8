//! Scalar abstraction: the kernel algebra is generic over the floating
//! point type, and kernels may carry real or complex weights.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{Float, NumAssign};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
///
/// Adds directed-rounding steps and the default comparison tolerances on
/// top of [`num_traits::Float`].
pub trait Scalar:
    Float + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest value strictly greater than `self`.
    fn next_up(self) -> Self;
    /// Largest value strictly less than `self`.
    fn next_down(self) -> Self;

    /// Relative tolerance for exact-arithmetic identities (1e-12 for `f64`).
    fn eq_tol() -> Self;

    /// Convert an `f64` literal; panics only on genuinely unrepresentable
    /// input, which never happens for the constants used here.
    fn lit(x: f64) -> Self;

    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn next_up(self) -> Self {
        f64::next_up(self)
    }
    #[inline]
    fn next_down(self) -> Self {
        f64::next_down(self)
    }
    fn eq_tol() -> Self {
        1e-12
    }
    fn lit(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn next_up(self) -> Self {
        f32::next_up(self)
    }
    #[inline]
    fn next_down(self) -> Self {
        f32::next_down(self)
    }
    fn eq_tol() -> Self {
        1e-5
    }
    fn lit(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Weight carried by a measure entry: either the scalar itself (positive
/// and signed kernels) or `Complex<S>` (multiplier kernels).
pub trait Entry<S: Scalar>:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(r: S) -> Self;
    /// Multiply by a real scalar.
    fn scale(self, r: S) -> Self;
    /// |entry|.
    fn modulus(self) -> S;
    /// True when the entry is a nonnegative real.
    fn is_nonneg_real(self) -> bool;
    /// Real part.
    fn re(self) -> S;
    fn as_complex(self) -> Complex<S>;
}

impl<S: Scalar> Entry<S> for S {
    fn zero() -> Self {
        S::zero()
    }
    fn one() -> Self {
        S::one()
    }
    fn from_real(r: S) -> Self {
        r
    }
    fn scale(self, r: S) -> Self {
        self * r
    }
    fn modulus(self) -> S {
        self.abs()
    }
    fn is_nonneg_real(self) -> bool {
        self >= S::zero()
    }
    fn re(self) -> S {
        self
    }
    fn as_complex(self) -> Complex<S> {
        Complex::new(self, S::zero())
    }
}

impl<S: Scalar> Entry<S> for Complex<S> {
    fn zero() -> Self {
        Complex::new(S::zero(), S::zero())
    }
    fn one() -> Self {
        Complex::new(S::one(), S::zero())
    }
    fn from_real(r: S) -> Self {
        Complex::new(r, S::zero())
    }
    fn scale(self, r: S) -> Self {
        Complex::new(self.re * r, self.im * r)
    }
    fn modulus(self) -> S {
        self.norm()
    }
    fn is_nonneg_real(self) -> bool {
        self.im == S::zero() && self.re >= S::zero()
    }
    fn re(self) -> S {
        self.re
    }
    fn as_complex(self) -> Complex<S> {
        self
    }
}

/// Certified underestimate of a sum of nonnegative terms evaluated in
/// round-to-nearest: the accumulated error of `n` additions is below
/// `n * eps * sum`, so shrinking by that factor is safe.
pub(crate) fn sum_lower<S: Scalar>(sum: S, n_terms: usize) -> S {
    let guard = S::one() - S::epsilon() * S::lit((n_terms + 2) as f64);
    (sum * guard).max(S::zero())
}

/// Certified overestimate counterpart of [`sum_lower`].
pub(crate) fn sum_upper<S: Scalar>(sum: S, n_terms: usize) -> S {
    let guard = S::one() + S::epsilon() * S::lit((n_terms + 2) as f64);
    sum * guard
}
