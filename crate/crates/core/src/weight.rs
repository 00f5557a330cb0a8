//! Weight (test) functions `w >= 1` defining the weighted spaces, with an
//! optional geometric extrapolation model beyond the window.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::StateSpace;

/// Geometric tail: `w(x) = w(x_max) * ratio^(x - x_max)` beyond the
/// window. Growth models have `ratio > 1`; `ratio = 1` is the constant
/// extension (used by `w = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricTail<S: Scalar> {
    pub ratio: S,
}

/// Pointwise weight `w(x) >= 1` on the window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFn<S: Scalar> {
    space: StateSpace,
    values: Vec<S>,
    tail_model: Option<GeometricTail<S>>,
}

impl<S: Scalar> WeightFn<S> {
    pub fn new(
        space: StateSpace,
        values: Vec<S>,
        tail_model: Option<GeometricTail<S>>,
    ) -> Result<Self> {
        if values.len() != space.window_len() {
            return Err(Error::Invalid(format!(
                "weight has {} values for a window of {}",
                values.len(),
                space.window_len()
            )));
        }
        if values.iter().any(|&v| !(v >= S::one()) || !v.is_finite()) {
            return Err(Error::Invalid("weights must satisfy w(x) >= 1".into()));
        }
        if let Some(t) = tail_model {
            if !(t.ratio >= S::one()) {
                return Err(Error::Invalid("geometric tail ratio must be >= 1".into()));
            }
        }
        Ok(WeightFn {
            space,
            values,
            tail_model,
        })
    }

    pub fn one(space: StateSpace) -> Self {
        WeightFn {
            values: vec![S::one(); space.window_len()],
            space,
            tail_model: Some(GeometricTail { ratio: S::one() }),
        }
    }

    /// `w(x) = z^x` with the matching geometric tail model.
    pub fn geometric(space: StateSpace, z: S) -> Result<Self> {
        if !(z > S::one()) {
            return Err(Error::Invalid("geometric weight needs z > 1".into()));
        }
        let n = space.window_len();
        let mut values = Vec::with_capacity(n);
        let mut v = S::one();
        for _ in 0..n {
            values.push(v);
            v *= z;
        }
        Ok(WeightFn {
            space,
            values,
            tail_model: Some(GeometricTail { ratio: z }),
        })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn tail_model(&self) -> Option<GeometricTail<S>> {
        self.tail_model
    }

    /// Weight at a state, extrapolating through the tail model beyond the
    /// window. `Err(IncompatibleTail)` when no model exists.
    pub fn at(&self, state: usize) -> Result<S> {
        if state < self.values.len() {
            return Ok(self.values[state]);
        }
        match self.tail_model {
            Some(GeometricTail { ratio }) => {
                let last = self.values[self.values.len() - 1];
                let excess = (state - (self.values.len() - 1)) as f64;
                Ok(last * ratio.powf(S::lit(excess)))
            }
            None => Err(Error::IncompatibleTail),
        }
    }

    pub fn max_value(&self) -> S {
        self.values.iter().copied().fold(S::one(), S::max)
    }
}
