//! Two-sided certified bounds with outward rounding at ulp granularity.
//!
//! Every arithmetic operation evaluates in round-to-nearest and then bumps
//! the endpoints one ulp outward, which encloses the exact result because
//! nearest rounding is off by at most half an ulp. Library functions that
//! are not correctly rounded (`powf`, `ln`, `exp`) get a two-ulp bump.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<S: Scalar> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: S) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Self::point(S::zero())
    }

    /// `[lo, +inf)`, for bounds the window cannot close.
    pub fn unbounded_above(lo: S) -> Self {
        Interval {
            lo,
            hi: S::infinity(),
        }
    }

    pub fn width(self) -> S {
        self.hi - self.lo
    }

    pub fn midpoint(self) -> S {
        (self.lo + self.hi) * S::lit(0.5)
    }

    pub fn contains(self, x: S) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Outward bump by one ulp on both sides.
    pub fn widen_ulp(self) -> Self {
        Interval {
            lo: self.lo.next_down(),
            hi: self.hi.next_up(),
        }
    }

    pub fn add(self, rhs: Self) -> Self {
        Interval {
            lo: (self.lo + rhs.lo).next_down(),
            hi: (self.hi + rhs.hi).next_up(),
        }
    }

    pub fn sub(self, rhs: Self) -> Self {
        Interval {
            lo: (self.lo - rhs.hi).next_down(),
            hi: (self.hi - rhs.lo).next_up(),
        }
    }

    pub fn mul(self, rhs: Self) -> Self {
        let cands = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let mut lo = cands[0];
        let mut hi = cands[0];
        for &c in &cands[1..] {
            if c < lo {
                lo = c;
            }
            if c > hi {
                hi = c;
            }
        }
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    /// Division; the divisor must not straddle zero.
    pub fn div(self, rhs: Self) -> Self {
        assert!(
            rhs.lo > S::zero() || rhs.hi < S::zero(),
            "interval division by a range containing zero"
        );
        let cands = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        let mut lo = cands[0];
        let mut hi = cands[0];
        for &c in &cands[1..] {
            if c < lo {
                lo = c;
            }
            if c > hi {
                hi = c;
            }
        }
        Interval {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    pub fn scale(self, r: S) -> Self {
        self.mul(Interval::point(r))
    }

    /// Reciprocal of a strictly positive interval.
    pub fn recip(self) -> Self {
        assert!(self.lo > S::zero(), "recip of a non-positive interval");
        Interval {
            lo: (S::one() / self.hi).next_down().max(S::zero()),
            hi: if self.lo.is_finite() {
                (S::one() / self.lo).next_up()
            } else {
                S::zero()
            },
        }
    }

    pub fn sqrt(self) -> Self {
        assert!(self.lo >= S::zero(), "sqrt of a negative interval");
        Interval {
            lo: self.lo.sqrt().next_down().max(S::zero()),
            hi: self.hi.sqrt().next_up(),
        }
    }

    /// `self^(1/root)` for a nonnegative interval; two-ulp outward bump
    /// since `powf` is not correctly rounded.
    pub fn nth_root(self, root: u32) -> Self {
        assert!(self.lo >= S::zero() && root >= 1);
        if root == 1 {
            return self;
        }
        let p = S::one() / S::lit(root as f64);
        let lo = self.lo.powf(p).next_down().next_down().max(S::zero());
        let hi = if self.hi.is_finite() {
            self.hi.powf(p).next_up().next_up()
        } else {
            S::infinity()
        };
        Interval { lo, hi }
    }

    /// Integer power of a nonnegative interval.
    pub fn powi(self, n: u32) -> Self {
        assert!(self.lo >= S::zero());
        let mut acc = Interval::point(S::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Smallest interval containing both.
    pub fn hull(self, rhs: Self) -> Self {
        Interval {
            lo: self.lo.min(rhs.lo),
            hi: self.hi.max(rhs.hi),
        }
    }

    /// Elementwise min, valid when both intervals bound the same kind of
    /// quantity and the minimum of the true values is wanted.
    pub fn min_pair(self, rhs: Self) -> Self {
        Interval {
            lo: self.lo.min(rhs.lo),
            hi: self.hi.min(rhs.hi),
        }
    }

    pub fn max_pair(self, rhs: Self) -> Self {
        Interval {
            lo: self.lo.max(rhs.lo),
            hi: self.hi.max(rhs.hi),
        }
    }
}
