//! Finitely-supported measures with certified tail bookkeeping.

use crate::error::{Error, Result};
use crate::scalar::{sum_upper, Entry, Scalar};
use crate::space::StateSpace;

/// An atomic measure: finitely many weighted atoms plus a bound on the
/// mass that may sit outside the represented atoms (always beyond the
/// window; zero on finite spaces). Entries are kept sorted by state with
/// distinct indices.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure<S: Scalar, W: Entry<S> = S> {
    space: StateSpace,
    entries: Vec<(usize, W)>,
    tail_bound: S,
}

impl<S: Scalar, W: Entry<S>> AtomicMeasure<S, W> {
    pub fn new(space: StateSpace, mut entries: Vec<(usize, W)>, tail_bound: S) -> Result<Self> {
        if tail_bound < S::zero() || !tail_bound.is_finite() {
            return Err(Error::Invalid("tail bound must be finite and >= 0".into()));
        }
        if space.is_finite() && tail_bound > S::zero() {
            return Err(Error::Invalid("finite spaces admit no tail mass".into()));
        }
        entries.retain(|&(_, w)| w != W::zero());
        entries.sort_by_key(|&(s, _)| s);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Invalid(format!(
                    "duplicate atom at state {}",
                    pair[0].0
                )));
            }
        }
        for &(s, w) in &entries {
            space.check_state(s)?;
            if !w.modulus().is_finite() {
                return Err(Error::Invalid(format!("non-finite weight at state {s}")));
            }
        }
        Ok(AtomicMeasure {
            space,
            entries,
            tail_bound,
        })
    }

    pub fn zero(space: StateSpace) -> Self {
        AtomicMeasure {
            space,
            entries: Vec::new(),
            tail_bound: S::zero(),
        }
    }

    pub fn dirac(space: StateSpace, x: usize) -> Self {
        space.check_state(x).expect("dirac point outside space");
        AtomicMeasure {
            space,
            entries: vec![(x, W::one())],
            tail_bound: S::zero(),
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn entries(&self) -> &[(usize, W)] {
        &self.entries
    }

    pub fn tail_bound(&self) -> S {
        self.tail_bound
    }

    pub fn weight_at(&self, state: usize) -> W {
        match self.entries.binary_search_by_key(&state, |&(s, _)| s) {
            Ok(i) => self.entries[i].1,
            Err(_) => W::zero(),
        }
    }

    /// Sum of the weights (signed / complex).
    pub fn sum_weights(&self) -> W {
        let mut acc = W::zero();
        for &(_, w) in &self.entries {
            acc += w;
        }
        acc
    }

    /// Sum of |weights|, tail excluded.
    pub fn abs_mass(&self) -> S {
        let mut acc = S::zero();
        for &(_, w) in &self.entries {
            acc += w.modulus();
        }
        acc
    }

    /// Total variation: sum of |weights| plus the tail bound.
    pub fn total_variation(&self) -> S {
        self.abs_mass() + self.tail_bound
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&(_, w)| w.is_nonneg_real())
    }

    /// Probability check: positive, and mass + tail equal to one within
    /// the scalar identity tolerance.
    pub fn is_probability(&self) -> bool {
        self.is_positive()
            && (self.total_variation() - S::one()).abs() <= S::lit(32.0) * S::eq_tol()
    }

    /// True when every atom lies inside the window.
    pub fn supported_in_window(&self) -> bool {
        self.entries.iter().all(|&(s, _)| self.space.in_window(s))
    }

    /// Mass (in modulus) sitting on explicit atoms beyond the window.
    pub fn beyond_window_mass(&self) -> S {
        let mut acc = S::zero();
        for &(s, w) in &self.entries {
            if !self.space.in_window(s) {
                acc += w.modulus();
            }
        }
        acc
    }

    pub fn scaled(&self, c: W) -> Self {
        AtomicMeasure {
            space: self.space,
            entries: self.entries.iter().map(|&(s, w)| (s, w * c)).collect(),
            tail_bound: self.tail_bound * c.modulus(),
        }
    }

    /// `self + c * other`, tails added conservatively as
    /// `tail(self) + |c| * tail(other)`.
    pub fn add_scaled(&self, c: W, other: &Self) -> Result<Self> {
        self.space.check_same(other.space)?;
        let mut merged: Vec<(usize, W)> =
            Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() || j < other.entries.len() {
            let take_left = match (self.entries.get(i), other.entries.get(j)) {
                (Some(&(a, _)), Some(&(b, _))) => a <= b,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            if take_left {
                let (s, w) = self.entries[i];
                if j < other.entries.len() && other.entries[j].0 == s {
                    merged.push((s, w + other.entries[j].1 * c));
                    j += 1;
                } else {
                    merged.push((s, w));
                }
                i += 1;
            } else {
                let (s, w) = other.entries[j];
                merged.push((s, w * c));
                j += 1;
            }
        }
        merged.retain(|&(_, w)| w != W::zero());
        Ok(AtomicMeasure {
            space: self.space,
            entries: merged,
            tail_bound: self.tail_bound + other.tail_bound * c.modulus(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-W::one(), other)
    }

    /// Pairing `<f, mu> = sum f(x) mu({x})` for a window function; the
    /// returned radius covers atoms beyond the window and tail mass via
    /// the declared sup bound.
    pub fn pair(&self, values: &[W], beyond_sup: Option<S>) -> Result<(W, S)> {
        let mut acc = W::zero();
        let mut rad = S::zero();
        let mut unknown = self.tail_bound;
        for &(s, w) in &self.entries {
            if s < values.len() {
                acc += values[s] * w;
            } else {
                unknown += w.modulus();
            }
        }
        if unknown > S::zero() {
            match beyond_sup {
                Some(b) => rad = unknown * b,
                None => return Err(Error::MissingTailBound),
            }
        }
        Ok((acc, rad))
    }

    /// Restrict to atoms satisfying the predicate (tail dropped: the
    /// caller decides how unlocated mass is attributed).
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        AtomicMeasure {
            space: self.space,
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(s, _)| keep(s))
                .collect(),
            tail_bound: S::zero(),
        }
    }

    pub fn with_tail(mut self, tail: S) -> Self {
        self.tail_bound = tail;
        self
    }

    /// Certified upper bound on total variation accounting for float
    /// summation error.
    pub fn total_variation_upper(&self) -> S {
        sum_upper(self.total_variation(), self.entries.len() + 1)
    }
}

impl<S: Scalar> AtomicMeasure<S> {
    /// Uniform probability on the window.
    pub fn uniform(space: StateSpace) -> Self {
        let n = space.window_len();
        let w = S::one() / S::lit(n as f64);
        AtomicMeasure {
            space,
            entries: (0..n).map(|s| (s, w)).collect(),
            tail_bound: S::zero(),
        }
    }

    /// Normalize a positive measure to a probability.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_variation();
        if m <= S::zero() {
            return Err(Error::Invalid("cannot normalize the zero measure".into()));
        }
        let inv = S::one() / m;
        Ok(AtomicMeasure {
            space: self.space,
            entries: self.entries.iter().map(|&(s, w)| (s, w * inv)).collect(),
            tail_bound: self.tail_bound * inv,
        })
    }
}

/// Function values on the window, with an optional sup bound beyond it.
/// The bound is required whenever the function meets mass outside the
/// window.
#[derive(Clone, Debug)]
pub struct WindowFn<S: Scalar, W: Entry<S> = S> {
    space: StateSpace,
    values: Vec<W>,
    beyond_sup: Option<S>,
}

impl<S: Scalar, W: Entry<S>> WindowFn<S, W> {
    pub fn new(space: StateSpace, values: Vec<W>, beyond_sup: Option<S>) -> Result<Self> {
        if values.len() != space.window_len() {
            return Err(Error::Invalid(format!(
                "function has {} values for a window of {}",
                values.len(),
                space.window_len()
            )));
        }
        if let Some(b) = beyond_sup {
            if b < S::zero() || !b.is_finite() {
                return Err(Error::Invalid(
                    "beyond-window sup must be finite, >= 0".into(),
                ));
            }
        }
        Ok(WindowFn {
            space,
            values,
            beyond_sup,
        })
    }

    pub fn constant(space: StateSpace, c: W) -> Self {
        WindowFn {
            values: vec![c; space.window_len()],
            beyond_sup: Some(c.modulus()),
            space,
        }
    }

    pub fn one(space: StateSpace) -> Self {
        Self::constant(space, W::one())
    }

    /// Indicator of a set of window states (zero beyond the window).
    pub fn indicator(space: StateSpace, states: &[usize]) -> Self {
        let mut values = vec![W::zero(); space.window_len()];
        for &s in states {
            values[s] = W::one();
        }
        WindowFn {
            space,
            values,
            beyond_sup: Some(S::zero()),
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn values(&self) -> &[W] {
        &self.values
    }

    pub fn beyond_sup(&self) -> Option<S> {
        self.beyond_sup
    }

    pub fn sup_modulus(&self) -> S {
        let mut m = self.beyond_sup.unwrap_or(S::zero());
        for v in &self.values {
            m = m.max(v.modulus());
        }
        m
    }
}
