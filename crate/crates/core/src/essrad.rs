//! Certified upper bounds on the essential spectral radius: the Doeblin
//! tail route (set functions of the row family), the residual-norm route
//! (power norms of `Q^ell - T`), weighted variants through conjugation,
//! multiplier bounds, and the weak-compactness membership check.

use num_complex::Complex;

use crate::decompose::{delta_nu, kernel_decompose, ui_tail, DensityKernel};
use crate::eigen::eigen_oracle;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;
use crate::multiplier::Multiplier;
use crate::scalar::Scalar;
use crate::weight::WeightFn;

/// Which theorem produced the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EssMethod {
    DoeblinTail,
    ResidualNorm,
    WeightedConjugate,
}

/// A certified upper bound on the essential spectral radius, with the
/// witnesses needed to replay it.
#[derive(Clone, Debug)]
pub struct EssBound<S: Scalar> {
    pub value: Interval<S>,
    pub method: EssMethod,
    pub ell: usize,
    /// Reference probability of the winning candidate (Doeblin route) or
    /// of the density kernel (residual route).
    pub nu: Option<AtomicMeasure<S>>,
    /// Power used in the residual norm, when applicable.
    pub n_power: Option<usize>,
    /// Quasi-compactness verdict: `Some(true)` when the bound is strictly
    /// below a certified lower bound on r(Q) (only Markov kernels carry
    /// one here, r = 1); `None` when no lower bound is known.
    pub quasi_compact: Option<bool>,
    /// Entrywise domination margin of the residual check, when one ran.
    pub domination_margin: Option<S>,
    /// Oracle spectrum, when a comparison was requested.
    pub oracle: Option<Vec<Complex<S>>>,
}

impl<S: Scalar> EssBound<S> {
    fn verdict(q: &Kernel<S>, value: Interval<S>) -> Option<bool> {
        if q.is_markov() {
            Some(value.hi < S::one())
        } else {
            None
        }
    }

    /// Attach the dense spectrum for finite-space comparison.
    pub fn with_oracle(mut self, q: &Kernel<S>, w: Option<&WeightFn<S>>) -> Result<Self> {
        self.oracle = Some(eigen_oracle(q, w)?);
        Ok(self)
    }
}

/// Doeblin-tail route: `r_e(Q) <= min over (ell, nu) of
/// Delta_nu({Q^ell(x, .)})^(1/ell)`. An empty candidate list yields an
/// unbounded report.
pub fn re_upper_doeblin<S: Scalar>(
    q: &Kernel<S>,
    candidates: &[(usize, AtomicMeasure<S>)],
) -> Result<EssBound<S>> {
    let mut best: Option<(Interval<S>, usize, AtomicMeasure<S>)> = None;
    for (ell, nu) in candidates {
        let qell = q.power(*ell)?;
        let family: Vec<AtomicMeasure<S>> = qell.rows().to_vec();
        let delta = delta_nu(&family, nu)?;
        let bound = delta.nth_root(*ell as u32);
        let better = match &best {
            None => true,
            Some((cur, _, _)) => bound.hi < cur.hi,
        };
        if better {
            best = Some((bound, *ell, nu.clone()));
        }
    }
    match best {
        Some((value, ell, nu)) => Ok(EssBound {
            quasi_compact: EssBound::verdict(q, value),
            value,
            method: EssMethod::DoeblinTail,
            ell,
            nu: Some(nu),
            n_power: None,
            domination_margin: None,
            oracle: None,
        }),
        None => Ok(EssBound {
            value: Interval::unbounded_above(S::zero()),
            method: EssMethod::DoeblinTail,
            ell: 0,
            nu: None,
            n_power: None,
            quasi_compact: None,
            domination_margin: None,
            oracle: None,
        }),
    }
}

/// Residual-norm route: with `S = Q^ell - T >= 0` entrywise and `T`'s
/// densities uniformly integrable,
/// `r_e(Q) <= (||S^n||^(1/n))^(1/ell)` for every power `n`.
pub fn re_upper_residual<S: Scalar>(
    q: &Kernel<S>,
    ell: usize,
    t: &DensityKernel<S>,
    n_power: usize,
) -> Result<EssBound<S>> {
    if ell < 1 || n_power < 1 {
        return Err(Error::Invalid("need ell >= 1 and n_power >= 1".into()));
    }
    let qell = q.power(ell)?;
    let tk = t.to_kernel()?;
    let diff = qell.sub(&tk)?;
    let (margin, wx, wy) = diff.min_entry();
    let tol = S::lit(64.0) * S::epsilon() * qell.sup_norm().max(S::one());
    if margin < -tol {
        return Err(Error::NotDominated { x: wx, y: wy });
    }
    // Uniform integrability of alpha at the declared cutoff.
    let cutoff = S::lit(crate::drift::UI_CUTOFF);
    let ui_tol = S::lit(crate::drift::UI_TOL);
    let tail = ui_tail(t, cutoff)?;
    if tail > ui_tol {
        return Err(Error::NotUniformlyIntegrable {
            tail: tail.to_f64(),
            tol: ui_tol.to_f64(),
            cutoff: cutoff.to_f64(),
        });
    }
    // Clamp cancellation noise before taking power norms.
    let s_rows = diff
        .rows()
        .iter()
        .map(|row| {
            AtomicMeasure::new(
                diff.space(),
                row.entries()
                    .iter()
                    .map(|&(y, v)| (y, v.max(S::zero())))
                    .collect(),
                row.tail_bound(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let s_kernel = Kernel::new(diff.space(), s_rows, false)?;
    let w_one = WeightFn::one(q.space());
    let norm_n = s_kernel.power_norm_weighted(&w_one, n_power)?;
    let value = norm_n.nth_root((n_power * ell) as u32);
    Ok(EssBound {
        quasi_compact: EssBound::verdict(q, value),
        value,
        method: EssMethod::ResidualNorm,
        ell,
        nu: Some(t.nu().clone()),
        n_power: Some(n_power),
        domination_margin: Some(margin),
        oracle: None,
    })
}

/// Strategy selector for the weighted route.
pub enum WeightedStrategy<'a, S: Scalar> {
    Doeblin(&'a [(usize, AtomicMeasure<S>)]),
    Residual {
        ell: usize,
        t: &'a DensityKernel<S>,
        n_power: usize,
    },
}

/// Weighted-space bound through conjugation:
/// `r_e^w(Q) = r_e(Q^(w))`, so the plain-route bound on the conjugated
/// kernel transfers back unchanged.
pub fn re_upper_weighted<S: Scalar>(
    q: &Kernel<S>,
    w: &WeightFn<S>,
    strategy: WeightedStrategy<'_, S>,
) -> Result<EssBound<S>> {
    let qw = q.conjugate(w)?;
    let mut bound = match strategy {
        WeightedStrategy::Doeblin(candidates) => re_upper_doeblin(&qw, candidates)?,
        WeightedStrategy::Residual { ell, t, n_power } => {
            let t_conj = conjugate_density(t, w)?;
            re_upper_residual(&qw, ell, &t_conj, n_power)?
        }
    };
    // The conjugated kernel loses the markov flag; the verdict transfers
    // from the original kernel's exact spectral radius.
    bound.quasi_compact = EssBound::verdict(q, bound.value);
    bound.method = EssMethod::WeightedConjugate;
    Ok(bound)
}

/// `T^(w) = T_{nu, alpha^(w)}` with
/// `alpha^(w)(x, y) = alpha(x, y) w(y) / w(x)`.
fn conjugate_density<S: Scalar>(t: &DensityKernel<S>, w: &WeightFn<S>) -> Result<DensityKernel<S>> {
    let mut alpha = Vec::with_capacity(t.alpha().len());
    for (i, row) in t.alpha().iter().enumerate() {
        let x = t.row_states()[i];
        let wx = w.at(x)?;
        let mut out = Vec::with_capacity(row.len());
        for (k, &a) in row.iter().enumerate() {
            let y = t.nu().entries()[k].0;
            out.push(a * w.at(y)? / wx);
        }
        alpha.push(out);
    }
    DensityKernel::new(t.nu().clone(), t.row_states().to_vec(), alpha, None)
}

/// Twisted-kernel bounds: `r(Q_chi) <= |chi| r(Q)` and
/// `r_e(Q_chi) <= |chi| r(S)^(1/ell)`.
#[derive(Clone, Debug)]
pub struct MultiplierBound<S: Scalar> {
    pub chi_norm: S,
    pub r_bound: S,
    pub re_bound: S,
    /// For `|chi| <= 1`: whether the essential bound sits below the
    /// spectral bound, the bound-level restatement of the dichotomy.
    pub dichotomy_consistent: Option<bool>,
}

pub fn multiplier_bound<S: Scalar>(
    q: &Kernel<S>,
    chi: &Multiplier<S>,
    ell: usize,
    t: &DensityKernel<S>,
    n_power: usize,
) -> Result<MultiplierBound<S>> {
    let w_one = WeightFn::one(q.space());
    let sr = q.spectral_radius_upper(&w_one, n_power.max(4))?;
    let r_of_q = sr.exact.unwrap_or(sr.upper.hi);
    let r_bound = chi.norm_bound() * r_of_q;
    let ess = re_upper_residual(q, ell, t, n_power)?;
    let re_bound = chi.norm_bound() * ess.value.hi;
    let dichotomy_consistent = if chi.norm_bound() <= S::one() {
        Some(re_bound <= r_of_q * (S::one() + S::lit(64.0) * S::epsilon()))
    } else {
        None
    };
    Ok(MultiplierBound {
        chi_norm: chi.norm_bound(),
        r_bound,
        re_bound,
        dichotomy_consistent,
    })
}

/// Membership diagnostics for the class of kernels whose adjoint acts
/// weakly compactly on measures.
#[derive(Clone, Debug)]
pub struct KstarReport<S: Scalar> {
    pub is_member: bool,
    /// Largest singular row mass against `nu` (tail included).
    pub max_singular_mass: S,
    /// `ui_tail` of the density family at the cutoff.
    pub ui_value: S,
    pub cutoff: S,
}

/// `Q` belongs to the weakly-compact class iff every row is
/// `nu`-absolutely continuous and the densities are uniformly
/// `nu`-integrable; on window data: zero singular mass and a `ui_tail`
/// below tolerance at the declared cutoff.
pub fn kstar_check<S: Scalar>(
    q: &Kernel<S>,
    nu: &AtomicMeasure<S>,
    tolerance: S,
) -> Result<KstarReport<S>> {
    if !(tolerance > S::zero()) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let (dk, sing) = kernel_decompose(q, nu)?;
    let max_singular_mass = sing
        .rows()
        .iter()
        .map(|r| r.total_variation())
        .fold(S::zero(), S::max);
    let cutoff = S::one() / tolerance;
    let ui_value = ui_tail(&dk, cutoff)?;
    let sing_tol = S::lit(32.0) * S::eq_tol() * q.sup_norm().max(S::one());
    Ok(KstarReport {
        is_member: max_singular_mass <= sing_tol && ui_value <= tolerance,
        max_singular_mass,
        ui_value,
        cutoff,
    })
}
