//! Discrete state spaces: finite, or a finite observation window into a
//! countable space.

use crate::error::{Error, Result};

/// A discrete state space. `WindowedCountable` keeps explicit data for
/// states `0..=x_max` while measures may still place mass beyond the
/// window (as explicit out-of-window atoms or as an aggregate tail
/// bound).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSpace {
    Finite { n: usize },
    WindowedCountable { x_max: usize },
}

impl StateSpace {
    pub fn finite(n: usize) -> Self {
        assert!(n >= 1, "finite space needs at least one state");
        StateSpace::Finite { n }
    }

    pub fn windowed(x_max: usize) -> Self {
        assert!(
            x_max >= 1,
            "window must contain states 0..=x_max, x_max >= 1"
        );
        StateSpace::WindowedCountable { x_max }
    }

    /// Number of window states (the states that carry kernel rows).
    pub fn window_len(self) -> usize {
        match self {
            StateSpace::Finite { n } => n,
            StateSpace::WindowedCountable { x_max } => x_max + 1,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, StateSpace::Finite { .. })
    }

    /// Whether a state index may carry mass on this space.
    pub fn admits(self, state: usize) -> bool {
        match self {
            StateSpace::Finite { n } => state < n,
            StateSpace::WindowedCountable { .. } => true,
        }
    }

    pub fn in_window(self, state: usize) -> bool {
        state < self.window_len()
    }

    pub fn check_state(self, state: usize) -> Result<()> {
        if self.admits(state) {
            Ok(())
        } else {
            Err(Error::StateOutOfRange(state, self.window_len()))
        }
    }

    pub fn check_same(self, other: StateSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

/// A nonempty set of window states with O(1) membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSet {
    space: StateSpace,
    states: Vec<usize>,
    mask: Vec<bool>,
}

impl StateSet {
    pub fn new(space: StateSpace, mut states: Vec<usize>) -> Result<Self> {
        states.sort_unstable();
        states.dedup();
        if states.is_empty() {
            return Err(Error::Invalid("state set must be nonempty".into()));
        }
        let mut mask = vec![false; space.window_len()];
        for &s in &states {
            if !space.in_window(s) {
                return Err(Error::StateOutOfRange(s, space.window_len()));
            }
            mask[s] = true;
        }
        Ok(StateSet {
            space,
            states,
            mask,
        })
    }

    pub fn full(space: StateSpace) -> Self {
        StateSet {
            space,
            states: (0..space.window_len()).collect(),
            mask: vec![true; space.window_len()],
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Membership for window states; states beyond the window are never
    /// members.
    pub fn contains(&self, state: usize) -> bool {
        state < self.mask.len() && self.mask[state]
    }

    pub fn is_full(&self) -> bool {
        self.states.len() == self.space.window_len()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.space.window_len())
            .filter(|&x| !self.mask[x])
            .collect()
    }
}
