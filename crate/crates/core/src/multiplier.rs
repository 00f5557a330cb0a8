//! Bounded multipliers `chi(x, y)` and the twisted kernels `Q_chi`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;
use crate::scalar::{Entry, Scalar};
use crate::space::StateSpace;

/// Storage for `chi`: a function of the landing state only, or a full
/// per-pair table on the support of the kernel rows.
#[derive(Clone, Debug)]
pub enum MultiplierForm<S: Scalar> {
    /// `chi(x, y) = values[y]`.
    OfY(Vec<Complex<S>>),
    /// Sparse rows aligned with the kernel support.
    OfXY(Vec<Vec<(usize, Complex<S>)>>),
}

/// A bounded complex multiplier with its sup-norm bound. The norm bound
/// covers at least the stored values; it may be declared larger to match
/// a sup over the whole product space.
#[derive(Clone, Debug)]
pub struct Multiplier<S: Scalar> {
    space: StateSpace,
    form: MultiplierForm<S>,
    norm_bound: S,
}

impl<S: Scalar> Multiplier<S> {
    pub fn new(
        space: StateSpace,
        form: MultiplierForm<S>,
        declared_norm: Option<S>,
    ) -> Result<Self> {
        let max_stored = match &form {
            MultiplierForm::OfY(v) => v.iter().map(|c| c.norm()).fold(S::zero(), S::max),
            MultiplierForm::OfXY(rows) => rows
                .iter()
                .flat_map(|r| r.iter().map(|&(_, c)| c.norm()))
                .fold(S::zero(), S::max),
        };
        if !max_stored.is_finite() {
            return Err(Error::Invalid("multiplier values must be finite".into()));
        }
        let norm_bound = match declared_norm {
            Some(b) if b < max_stored => {
                return Err(Error::Invalid(
                    "declared multiplier norm is below a stored value".into(),
                ))
            }
            Some(b) => b,
            None => max_stored,
        };
        Ok(Multiplier {
            space,
            form,
            norm_bound,
        })
    }

    /// Constant multiplier `chi = c`.
    pub fn constant(space: StateSpace, c: Complex<S>) -> Self {
        Multiplier {
            space,
            form: MultiplierForm::OfY(vec![c; space.window_len()]),
            norm_bound: c.norm(),
        }
    }

    /// Fourier multiplier `chi_t(x, y) = exp(i t xi(y))`; its norm is
    /// exactly one.
    pub fn fourier(space: StateSpace, xi: &[S], t: S) -> Result<Self> {
        if xi.len() != space.window_len() {
            return Err(Error::Invalid("xi must be defined on the window".into()));
        }
        let values = xi
            .iter()
            .map(|&v| {
                let a = t * v;
                Complex::new(a.cos(), a.sin())
            })
            .collect();
        Ok(Multiplier {
            space,
            form: MultiplierForm::OfY(values),
            norm_bound: S::one(),
        })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn norm_bound(&self) -> S {
        self.norm_bound
    }

    pub fn at(&self, x: usize, y: usize) -> Result<Complex<S>> {
        match &self.form {
            MultiplierForm::OfY(v) => v.get(y).copied().ok_or_else(|| {
                Error::Invalid(format!("multiplier undefined at landing state {y}"))
            }),
            MultiplierForm::OfXY(rows) => {
                let row = rows
                    .get(x)
                    .ok_or_else(|| Error::Invalid(format!("multiplier undefined at row {x}")))?;
                match row.binary_search_by_key(&y, |&(s, _)| s) {
                    Ok(i) => Ok(row[i].1),
                    Err(_) => Err(Error::Invalid(format!(
                        "multiplier undefined at pair ({x}, {y})"
                    ))),
                }
            }
        }
    }
}

/// `Q_chi(x, {y}) = chi(x, y) Q(x, {y})`. Tail mass is carried through
/// scaled by the multiplier norm bound.
pub fn multiplier_kernel<S: Scalar, W: Entry<S>>(
    q: &Kernel<S, W>,
    chi: &Multiplier<S>,
) -> Result<Kernel<S, Complex<S>>> {
    q.space().check_same(chi.space())?;
    let mut rows = Vec::with_capacity(q.rows().len());
    for (x, row) in q.rows().iter().enumerate() {
        let entries = row
            .entries()
            .iter()
            .map(|&(y, w)| Ok((y, w.as_complex() * chi.at(x, y)?)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(AtomicMeasure::new(
            q.space(),
            entries,
            row.tail_bound() * chi.norm_bound(),
        )?);
    }
    Kernel::new(q.space(), rows, false)
}

/// The Fourier kernel `P(t) = P_(chi_t)` with `chi_t(x,y) = exp(i t xi(y))`.
pub fn fourier_kernel<S: Scalar>(p: &Kernel<S>, xi: &[S], t: S) -> Result<Kernel<S, Complex<S>>> {
    let chi = Multiplier::fourier(p.space(), xi, t)?;
    multiplier_kernel(p, &chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::WindowFn;

    #[test]
    fn unit_multiplier_is_identity_on_kernel() {
        let sp = StateSpace::finite(2);
        let p = Kernel::from_dense(sp, &[vec![0.5, 0.5], vec![0.5, 0.5]], true).unwrap();
        let chi = Multiplier::constant(sp, Complex::new(1.0, 0.0));
        let q = multiplier_kernel(&p, &chi).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(q.row(x).weight_at(y), Complex::new(0.5, 0.0));
            }
        }
    }

    #[test]
    fn fourier_at_zero_recovers_p() {
        let sp = StateSpace::finite(2);
        let p = Kernel::from_dense(sp, &[vec![0.3, 0.7], vec![0.6, 0.4]], true).unwrap();
        let q = fourier_kernel(&p, &[0.0, std::f64::consts::PI], 0.0).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(q.row(x).weight_at(y).re, p.row(x).weight_at(y));
                assert_eq!(q.row(x).weight_at(y).im, 0.0);
            }
        }
    }

    #[test]
    fn fourier_pi_flips_sign() {
        let sp = StateSpace::finite(2);
        let p = Kernel::from_dense(sp, &[vec![0.5, 0.5], vec![0.5, 0.5]], true).unwrap();
        let q = fourier_kernel(&p, &[0.0, std::f64::consts::PI], 1.0).unwrap();
        assert!((q.row(0).weight_at(0).re - 0.5).abs() < 1e-15);
        assert!((q.row(0).weight_at(1).re + 0.5).abs() < 1e-12);
        assert!(q.row(0).weight_at(1).im.abs() < 1e-12);
    }

    #[test]
    fn per_pair_table_and_declared_norm() {
        let sp = StateSpace::finite(2);
        let p = Kernel::from_dense(sp, &[vec![0.5, 0.5], vec![1.0, 0.0]], true).unwrap();
        // chi given on the support of each row only.
        let rows = vec![
            vec![(0, Complex::new(0.5, 0.0)), (1, Complex::new(0.0, 0.5))],
            vec![(0, Complex::new(-0.25, 0.0))],
        ];
        let chi = Multiplier::new(sp, MultiplierForm::OfXY(rows), Some(0.75)).unwrap();
        assert_eq!(chi.norm_bound(), 0.75);
        let q = multiplier_kernel(&p, &chi).unwrap();
        assert_eq!(q.row(0).weight_at(1), Complex::new(0.0, 0.25));
        assert_eq!(q.row(1).weight_at(0), Complex::new(-0.25, 0.0));
        // Declared norms below a stored value are rejected.
        let rows = vec![
            vec![(0, Complex::new(0.9, 0.0))],
            vec![(0, Complex::new(0.1, 0.0))],
        ];
        assert!(Multiplier::new(sp, MultiplierForm::OfXY(rows), Some(0.5)).is_err());
        // chi undefined on a support pair is an error at twist time.
        let rows = vec![
            vec![(1, Complex::new(1.0, 0.0))],
            vec![(0, Complex::new(1.0, 0.0))],
        ];
        let partial = Multiplier::new(sp, MultiplierForm::OfXY(rows), None).unwrap();
        assert!(multiplier_kernel(&p, &partial).is_err());
    }

    #[test]
    fn multiplier_domination_pointwise() {
        let sp = StateSpace::finite(3);
        let p = Kernel::from_dense(
            sp,
            &[
                vec![0.2, 0.5, 0.3],
                vec![0.1, 0.1, 0.8],
                vec![0.4, 0.4, 0.2],
            ],
            true,
        )
        .unwrap();
        let xi = [0.3, 1.1, 2.7];
        let q = fourier_kernel(&p, &xi, 0.9).unwrap();
        let f: WindowFn<f64> = WindowFn::new(sp, vec![1.0, -2.0, 0.5], None).unwrap();
        let fc = WindowFn::new(
            sp,
            f.values().iter().map(|&v| Complex::new(v, 0.0)).collect(),
            None,
        )
        .unwrap();
        let fabs = WindowFn::new(sp, f.values().iter().map(|&v| v.abs()).collect(), None).unwrap();
        let lhs = q.apply(&fc).unwrap();
        let rhs = p.apply(&fabs).unwrap();
        for x in 0..3 {
            assert!(lhs.values[x].norm() <= 1.0 * rhs.values[x] + 1e-14);
        }
    }
}
