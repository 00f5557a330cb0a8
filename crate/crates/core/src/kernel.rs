//! Bounded kernels on discrete spaces and their operator algebra: apply,
//! adjoint, composition, norms, weighted conjugation.
//!
//! A kernel stores one row measure per window state. On windowed spaces
//! the rows may place mass beyond the window (explicit atoms or tail
//! bounds); rows for states beyond the window are not represented. All
//! norm computations treat the window data as exhaustive for suprema,
//! i.e. a windowed kernel asserts that its unrepresented rows do not
//! exceed the window rows in (weighted) mass. Every operation propagates
//! tail bounds conservatively so reported scalars are certified.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::measure::{AtomicMeasure, WindowFn};
use crate::scalar::{sum_lower, sum_upper, Entry, Scalar};
use crate::space::StateSpace;
use crate::weight::WeightFn;

/// Row-indexed family of atomic measures; `W = S` for positive/signed
/// kernels, `W = Complex<S>` for multiplier kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<S: Scalar, W: Entry<S> = S> {
    space: StateSpace,
    rows: Vec<AtomicMeasure<S, W>>,
    markov: bool,
}

/// Result of applying a kernel to a window function: values plus a
/// per-point certified error radius from tail mass.
#[derive(Clone, Debug)]
pub struct Applied<S: Scalar, W: Entry<S> = S> {
    pub values: Vec<W>,
    pub radii: Vec<S>,
}

/// `||Q^n||_w^(1/n)` together with the exact spectral radius when the
/// kernel structure pins it (Markov kernels have r = 1).
#[derive(Clone, Copy, Debug)]
pub struct SpectralRadiusBound<S: Scalar> {
    pub upper: Interval<S>,
    pub exact: Option<S>,
}

impl<S: Scalar, W: Entry<S>> Kernel<S, W> {
    /// Build a kernel from row measures; `markov` claims row masses are
    /// exactly one (checked within the scalar identity tolerance).
    pub fn new(space: StateSpace, rows: Vec<AtomicMeasure<S, W>>, markov: bool) -> Result<Self> {
        if rows.len() != space.window_len() {
            return Err(Error::Invalid(format!(
                "kernel needs {} rows, got {}",
                space.window_len(),
                rows.len()
            )));
        }
        for row in &rows {
            space.check_same(row.space())?;
        }
        let kernel = Kernel {
            space,
            rows,
            markov,
        };
        if markov {
            kernel.check_markov()?;
        }
        Ok(kernel)
    }

    fn check_markov(&self) -> Result<()> {
        for (x, row) in self.rows.iter().enumerate() {
            if !row.is_positive() {
                return Err(Error::Invalid(format!(
                    "markov kernel has a signed/complex entry in row {x}"
                )));
            }
            let mass = row.sum_weights().re() + row.tail_bound();
            if (mass - S::one()).abs() > S::lit(32.0) * S::eq_tol() {
                return Err(Error::NotMarkov {
                    row: x,
                    mass: mass.to_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn identity(space: StateSpace) -> Self {
        let rows = (0..space.window_len())
            .map(|x| AtomicMeasure::dirac(space, x))
            .collect();
        Kernel {
            space,
            rows,
            markov: true,
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn rows(&self) -> &[AtomicMeasure<S, W>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &AtomicMeasure<S, W> {
        &self.rows[x]
    }

    pub fn is_markov(&self) -> bool {
        self.markov
    }

    pub fn is_positive(&self) -> bool {
        self.rows.iter().all(|r| r.is_positive())
    }

    /// Largest row total variation: `sup_x (|Q|(x, E))`, the operator norm
    /// on bounded functions.
    pub fn sup_norm(&self) -> S {
        self.rows
            .iter()
            .map(|r| r.total_variation())
            .fold(S::zero(), S::max)
    }

    /// True when some row has mass not located in the window.
    pub fn has_tail(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.tail_bound() > S::zero() || !r.supported_in_window())
    }

    /// `(Qf)(x) = sum_y f(y) Q(x, {y})` with a certified radius covering
    /// mass beyond the window.
    pub fn apply(&self, f: &WindowFn<S, W>) -> Result<Applied<S, W>> {
        self.space.check_same(f.space())?;
        let mut values = Vec::with_capacity(self.rows.len());
        let mut radii = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let (v, r) = row.pair(f.values(), f.beyond_sup())?;
            values.push(v);
            radii.push(r);
        }
        Ok(Applied { values, radii })
    }

    /// Adjoint action on measures: `(Q* mu)({y}) = sum_x mu({x}) Q(x, {y})`.
    /// Mass of `mu` beyond the window passes through unknown rows and is
    /// bounded by `sup_norm`.
    pub fn adjoint_apply(&self, mu: &AtomicMeasure<S, W>) -> Result<AtomicMeasure<S, W>> {
        self.space.check_same(mu.space())?;
        let mut acc: std::collections::BTreeMap<usize, W> = std::collections::BTreeMap::new();
        let mut tail = S::zero();
        let mut unrouted = mu.tail_bound();
        for &(x, c) in mu.entries() {
            if self.space.in_window(x) {
                let row = &self.rows[x];
                for &(y, q) in row.entries() {
                    *acc.entry(y).or_insert_with(W::zero) += q * c;
                }
                tail += c.modulus() * row.tail_bound();
            } else {
                unrouted += c.modulus();
            }
        }
        tail += unrouted * self.sup_norm();
        AtomicMeasure::new(self.space, acc.into_iter().collect(), tail)
    }

    /// Kernel composition `(Q1 Q2)(x, A) = sum_y Q1(x,{y}) Q2(y, A)`.
    /// First-step mass that leaves the window is routed into the product's
    /// tail bound, scaled by `sup_norm(Q2)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.space.check_same(other.space)?;
        let other_norm = other.sup_norm();
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut acc: std::collections::BTreeMap<usize, W> = std::collections::BTreeMap::new();
            let mut tail = row.tail_bound() * other_norm;
            for &(y, q) in row.entries() {
                if self.space.in_window(y) {
                    let ry = &other.rows[y];
                    for &(z, q2) in ry.entries() {
                        *acc.entry(z).or_insert_with(W::zero) += q * q2;
                    }
                    tail += q.modulus() * ry.tail_bound();
                } else {
                    tail += q.modulus() * other_norm;
                }
            }
            rows.push(AtomicMeasure::new(
                self.space,
                acc.into_iter().collect(),
                tail,
            )?);
        }
        Kernel::new(self.space, rows, self.markov && other.markov)
    }

    /// `Q^n`; `Q^0` is the identity.
    pub fn power(&self, n: usize) -> Result<Self> {
        let mut acc = Kernel::identity(self.space);
        for _ in 0..n {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    /// Weighted row sum `sum_y |Q|(x,{y}) w(y)` as a certified interval;
    /// unlocated tail mass makes the upper endpoint infinite on windowed
    /// spaces (the weight is unbounded out there).
    fn row_weight_sum(&self, x: usize, w: &WeightFn<S>, take_modulus: bool) -> Result<Interval<S>> {
        let row = &self.rows[x];
        let mut sum = S::zero();
        let mut n_terms = 0usize;
        for &(y, q) in row.entries() {
            let wy = w.at(y)?;
            let qv = if take_modulus { q.modulus() } else { q.re() };
            sum += qv * wy;
            n_terms += 1;
        }
        let mut iv = Interval::new(sum_lower(sum, n_terms), sum_upper(sum, n_terms));
        if row.tail_bound() > S::zero() {
            iv = Interval::new(iv.lo, S::infinity());
        }
        Ok(iv)
    }

    /// `(Qw)(x)` for every window state, entrywise-modulus weights.
    pub fn apply_weight_abs(&self, w: &WeightFn<S>) -> Result<Vec<Interval<S>>> {
        self.space.check_same(w.space())?;
        (0..self.rows.len())
            .map(|x| self.row_weight_sum(x, w, true))
            .collect()
    }

    /// Operator norm on the weighted space: certified interval around
    /// `sup_x (|Q|w)(x) / w(x)`.
    pub fn weighted_norm(&self, w: &WeightFn<S>) -> Result<Interval<S>> {
        let sums = self.apply_weight_abs(w)?;
        let mut out = Interval::point(S::zero());
        for (x, s) in sums.iter().enumerate() {
            let ratio = s.div(Interval::point(w.values()[x]));
            out = out.max_pair(ratio);
        }
        Ok(out)
    }

    /// Certified interval around `||Q^n||_w`, computed by iterating the
    /// kernel on the weight (never materializing kernel powers). On
    /// windowed spaces the upper endpoint also covers unrepresented rows
    /// through the one-step norm.
    pub fn power_norm_weighted(&self, w: &WeightFn<S>, n: usize) -> Result<Interval<S>> {
        assert!(n >= 1);
        self.space.check_same(w.space())?;
        let one_step = self.weighted_norm(w)?;
        let windowed = !self.space.is_finite();
        // u_k(x) brackets (|Q|^k w)(x); g_k bounds sup_y (|Q|^k w)(y)/w(y)
        // over all states, including unrepresented ones.
        let mut u: Vec<Interval<S>> = w.values().iter().map(|&v| Interval::point(v)).collect();
        let mut g = Interval::point(S::one());
        for _ in 0..n {
            let mut next = Vec::with_capacity(u.len());
            for row in &self.rows {
                let mut acc = Interval::zero();
                for &(y, q) in row.entries() {
                    let qm = Interval::point(q.modulus());
                    if self.space.in_window(y) {
                        acc = acc.add(qm.mul(u[y]));
                    } else {
                        let wy = w.at(y)?;
                        let bracket = Interval::new(S::zero(), (g.hi * wy).next_up());
                        acc = acc.add(qm.mul(bracket));
                    }
                }
                if row.tail_bound() > S::zero() {
                    acc = Interval::new(acc.lo, S::infinity());
                }
                next.push(acc);
            }
            u = next;
            g = g.mul(one_step);
        }
        let mut out = Interval::point(S::zero());
        for (x, ux) in u.iter().enumerate() {
            out = out.max_pair(ux.div(Interval::point(w.values()[x])));
        }
        if windowed {
            out = Interval::new(out.lo, out.hi.max(g.hi));
        }
        Ok(out)
    }

    /// Upper bound on the weighted spectral radius via
    /// `||Q^n||_w^(1/n)`, valid for every `n` by submultiplicativity.
    /// For Markov kernels with `w >= 1` the exact value 1 is also
    /// reported (`Q 1 = 1` forces `r^w = 1`).
    pub fn spectral_radius_upper(
        &self,
        w: &WeightFn<S>,
        n: usize,
    ) -> Result<SpectralRadiusBound<S>> {
        let norm_n = self.power_norm_weighted(w, n)?;
        let upper = norm_n.nth_root(n as u32);
        let exact = if self.markov { Some(S::one()) } else { None };
        Ok(SpectralRadiusBound { upper, exact })
    }

    /// Weighted conjugation `Q^(w)(x,{y}) = w(x)^(-1) Q(x,{y}) w(y)`.
    /// Fails with `IncompatibleTail` when mass beyond the window cannot be
    /// priced (no tail model, or unlocated tail mass under an unbounded
    /// weight).
    pub fn conjugate(&self, w: &WeightFn<S>) -> Result<Self> {
        self.conjugate_impl(w, false)
    }

    /// Inverse conjugation `W Q W^(-1)`; `conjugate_inv(conjugate(Q, w), w)`
    /// recovers `Q` up to rounding.
    pub fn conjugate_inv(&self, w: &WeightFn<S>) -> Result<Self> {
        self.conjugate_impl(w, true)
    }

    fn conjugate_impl(&self, w: &WeightFn<S>, inverse: bool) -> Result<Self> {
        self.space.check_same(w.space())?;
        let mut rows = Vec::with_capacity(self.rows.len());
        for (x, row) in self.rows.iter().enumerate() {
            if row.tail_bound() > S::zero() && !self.space.is_finite() {
                return Err(Error::IncompatibleTail);
            }
            let wx = w.values()[x];
            let mut entries = Vec::with_capacity(row.entries().len());
            for &(y, q) in row.entries() {
                let wy = w.at(y)?;
                let factor = if inverse { wx / wy } else { wy / wx };
                entries.push((y, q.scale(factor)));
            }
            rows.push(AtomicMeasure::new(self.space, entries, row.tail_bound())?);
        }
        Kernel::new(self.space, rows, false)
    }

    /// Shrink a windowed kernel to a smaller observation window: rows
    /// beyond the new window are dropped (their states become
    /// beyond-window atoms of the remaining rows' targets), tails are
    /// kept.
    pub fn restrict_window(&self, x_max_new: usize) -> Result<Self> {
        match self.space {
            StateSpace::Finite { .. } => Err(Error::Invalid(
                "restrict_window applies to windowed spaces".into(),
            )),
            StateSpace::WindowedCountable { x_max } => {
                if x_max_new >= x_max || x_max_new < 1 {
                    return Err(Error::Invalid(format!(
                        "new window 0..={x_max_new} must shrink 0..={x_max}"
                    )));
                }
                let sp = StateSpace::windowed(x_max_new);
                let rows = self.rows[..=x_max_new]
                    .iter()
                    .map(|r| AtomicMeasure::new(sp, r.entries().to_vec(), r.tail_bound()))
                    .collect::<Result<Vec<_>>>()?;
                Kernel::new(sp, rows, self.markov)
            }
        }
    }

    /// Drop explicit atoms beyond the window and all tail bounds, giving a
    /// finite-space kernel; returns the largest mass dropped from any row.
    pub fn truncate_to_finite(&self) -> (Kernel<S, W>, S) {
        let n = self.space.window_len();
        let fin = StateSpace::finite(n);
        let mut dropped = S::zero();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                dropped = dropped.max(row.beyond_window_mass() + row.tail_bound());
                let entries: Vec<(usize, W)> = row
                    .entries()
                    .iter()
                    .copied()
                    .filter(|&(s, _)| s < n)
                    .collect();
                AtomicMeasure::new(fin, entries, S::zero()).expect("truncation is valid")
            })
            .collect();
        (
            Kernel {
                space: fin,
                rows,
                markov: false,
            },
            dropped,
        )
    }

    /// Dense window matrix (row-major); beyond-window atoms are ignored.
    pub fn to_dense(&self) -> Vec<Vec<W>> {
        let n = self.space.window_len();
        self.rows
            .iter()
            .map(|row| {
                let mut r = vec![W::zero(); n];
                for &(y, q) in row.entries() {
                    if y < n {
                        r[y] = q;
                    }
                }
                r
            })
            .collect()
    }
}

impl<S: Scalar> Kernel<S> {
    /// Positive-kernel constructor: validates nonnegative entries.
    pub fn positive(space: StateSpace, rows: Vec<AtomicMeasure<S>>, markov: bool) -> Result<Self> {
        for (x, row) in rows.iter().enumerate() {
            if !row.is_positive() {
                return Err(Error::Invalid(format!(
                    "positive kernel has a negative entry in row {x}"
                )));
            }
        }
        Kernel::new(space, rows, markov)
    }

    pub fn from_dense(space: StateSpace, dense: &[Vec<S>], markov: bool) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|r| {
                AtomicMeasure::new(
                    space,
                    r.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != S::zero())
                        .map(|(y, &v)| (y, v))
                        .collect(),
                    S::zero(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(space, rows, markov)
    }

    /// Rank-one Markov kernel `1 (x) nu`: every row equals `nu`.
    pub fn rank_one(nu: &AtomicMeasure<S>) -> Result<Self> {
        if !nu.is_probability() {
            return Err(Error::Invalid("rank-one rows must be a probability".into()));
        }
        let rows = vec![nu.clone(); nu.space().window_len()];
        Kernel::new(nu.space(), rows, true)
    }

    /// Entrywise difference `self - other` (rows subtracted, tails added).
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.space.check_same(other.space)?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Kernel::new(self.space, rows, false)
    }

    /// Smallest represented entry with its location (0 for an empty
    /// kernel); used for entrywise domination checks.
    pub fn min_entry(&self) -> (S, usize, usize) {
        let mut min = S::infinity();
        let mut arg = (0usize, 0usize);
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, v) in row.entries() {
                if v < min {
                    min = v;
                    arg = (x, y);
                }
            }
        }
        if !min.is_finite() {
            min = S::zero();
        }
        (min, arg.0, arg.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p: [[f64; 2]; 2], markov: bool) -> Kernel<f64> {
        let sp = StateSpace::finite(2);
        Kernel::from_dense(sp, &[p[0].to_vec(), p[1].to_vec()], markov).unwrap()
    }

    #[test]
    fn identity_applies_exactly() {
        let sp = StateSpace::finite(3);
        let id = Kernel::<f64>::identity(sp);
        let f: WindowFn<f64> = WindowFn::new(sp, vec![3.0, 6.0, 9.0], None).unwrap();
        let out = id.apply(&f).unwrap();
        assert_eq!(out.values, vec![3.0, 6.0, 9.0]);
        assert!(out.radii.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rank_one_forces_constant() {
        let sp = StateSpace::finite(3);
        let nu = AtomicMeasure::uniform(sp);
        let q = Kernel::rank_one(&nu).unwrap();
        let f: WindowFn<f64> = WindowFn::new(sp, vec![3.0, 6.0, 9.0], None).unwrap();
        let out = q.apply(&f).unwrap();
        for v in out.values {
            assert!((v - 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn swap_squares_to_identity() {
        let swap = two_state([[0.0, 1.0], [1.0, 0.0]], true);
        let sq = swap.power(2).unwrap();
        let id = Kernel::<f64>::identity(StateSpace::finite(2));
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(sq.row(x).weight_at(y), id.row(x).weight_at(y));
            }
        }
        let idk = swap.power(0).unwrap();
        assert_eq!(idk.row(0).weight_at(0), 1.0);
    }

    #[test]
    fn markov_validation_rejects_bad_rows() {
        let sp = StateSpace::finite(2);
        let res = Kernel::from_dense(sp, &[vec![0.5, 0.4], vec![0.5, 0.5]], true);
        assert!(matches!(res, Err(Error::NotMarkov { row: 0, .. })));
    }

    #[test]
    fn missing_tail_bound_detected() {
        let sp = StateSpace::windowed(2);
        let row0 = AtomicMeasure::new(sp, vec![(0, 0.5), (3, 0.5)], 0.0).unwrap();
        let rows = vec![
            row0,
            AtomicMeasure::dirac(sp, 1),
            AtomicMeasure::dirac(sp, 2),
        ];
        let q = Kernel::positive(sp, rows, true).unwrap();
        let f: WindowFn<f64> = WindowFn::new(sp, vec![1.0, 2.0, 3.0], None).unwrap();
        assert!(matches!(q.apply(&f), Err(Error::MissingTailBound)));
        let f2: WindowFn<f64> = WindowFn::new(sp, vec![1.0, 2.0, 3.0], Some(4.0)).unwrap();
        let out = q.apply(&f2).unwrap();
        assert!((out.values[0] - 0.5).abs() < 1e-15);
        assert!((out.radii[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sup_norm_is_max_row_mass() {
        let q = two_state([[0.4, 0.4], [0.1, 0.2]], false);
        assert!((q.sup_norm() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn weighted_norm_identity_is_one() {
        let sp = StateSpace::finite(4);
        let id = Kernel::<f64>::identity(sp);
        let w = WeightFn::new(sp, vec![1.0, 2.0, 5.0, 9.0], None).unwrap();
        let nrm = id.weighted_norm(&w).unwrap();
        assert!(nrm.contains(1.0) && nrm.width() < 1e-13);
    }

    #[test]
    fn substochastic_spectral_upper() {
        let q = two_state([[0.4, 0.4], [0.4, 0.4]], false);
        let sp = q.space();
        let w = WeightFn::one(sp);
        for n in [1, 3, 8] {
            let b = q.spectral_radius_upper(&w, n).unwrap();
            assert!(b.upper.contains(0.8) && b.upper.width() < 1e-12);
            assert!(b.exact.is_none());
        }
    }

    #[test]
    fn markov_radius_is_exactly_one() {
        let q = two_state([[0.9, 0.1], [0.2, 0.8]], true);
        let w = WeightFn::new(q.space(), vec![1.0, 4.0], None).unwrap();
        for n in [1usize, 5, 16] {
            let b = q.spectral_radius_upper(&w, n).unwrap();
            assert_eq!(b.exact, Some(1.0));
            assert!(b.upper.hi >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn conjugation_round_trips() {
        let q = two_state([[0.9, 0.1], [0.2, 0.8]], true);
        let sp = q.space();
        let w = WeightFn::new(sp, vec![1.0, 3.5], None).unwrap();
        let back = q.conjugate(&w).unwrap().conjugate_inv(&w).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((back.row(x).weight_at(y) - q.row(x).weight_at(y)).abs() < 1e-14);
            }
        }
    }
}
