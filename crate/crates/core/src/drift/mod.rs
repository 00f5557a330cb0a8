//! Drift/minorization certification and the renewal-series machinery: a
//! verified drift inequality plus a minorization on a small set yield a
//! split kernel whose return-time generating function pins `r_b`, and
//! with it a certified bound `r_e^w(P) <= 1/r_b` on the weighted
//! essential spectral radius. Also: generating-function diagnostics,
//! conversion of Foster-Lyapunov data into level-set certificates, and
//! synthesis of certificates on finite spaces from the spectrum.

mod solve;

pub use solve::{hitting_gf, return_gf, HittingBrackets};

use crate::decompose::{ui_tail, DensityKernel};
use crate::eigen::{eigen_oracle, subdominant_modulus};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;
use crate::scalar::{sum_lower, sum_upper, Scalar};
use crate::space::StateSet;
use crate::weight::WeightFn;

/// Default uniform-integrability gate: `ui_tail` at this cutoff must sit
/// below this tolerance.
pub const UI_CUTOFF: f64 = 1e9;
pub const UI_TOL: f64 = 1e-9;

/// Drift certificate: claims
/// `P w <= r1^{-1} (w 1_{C^c} + eta 1_C)` pointwise.
#[derive(Clone, Debug)]
pub struct DriftCertificate<S: Scalar> {
    c: StateSet,
    w: WeightFn<S>,
    r1: S,
    eta: S,
}

impl<S: Scalar> DriftCertificate<S> {
    pub fn new(c: StateSet, w: WeightFn<S>, r1: S, eta: S) -> Result<Self> {
        c.space().check_same(w.space())?;
        if !(r1 > S::one()) {
            return Err(Error::Invalid("drift certificate needs r1 > 1".into()));
        }
        if eta < S::zero() {
            return Err(Error::Invalid("drift certificate needs eta >= 0".into()));
        }
        Ok(DriftCertificate { c, w, r1, eta })
    }

    pub fn c(&self) -> &StateSet {
        &self.c
    }
    pub fn w(&self) -> &WeightFn<S> {
        &self.w
    }
    pub fn r1(&self) -> S {
        self.r1
    }
    pub fn eta(&self) -> S {
        self.eta
    }
}

/// Outcome of checking a drift certificate.
#[derive(Clone, Debug)]
pub struct DriftCheck<S: Scalar> {
    pub pass: bool,
    /// State with the largest relative excess
    /// `((Pw)(x) - rhs(x)) / rhs(x)` and that excess; relative so that
    /// rounding noise on huge-weight rows cannot mask a genuine
    /// violation elsewhere.
    pub worst_x: usize,
    pub worst_excess: S,
    /// `(Pw)(x)` and the certificate's right-hand side at the worst
    /// state.
    pub worst_lhs: S,
    pub worst_rhs: S,
    /// On pass, the implied global bound `Pw <= a w + b`.
    pub implied_global: (S, S),
}

/// Pointwise check of the drift inequality on the window; beyond-window
/// states are covered through the weight's tail model (rows whose mass
/// cannot be priced fail with `IncompatibleTail`).
pub fn verify_drift<S: Scalar>(p: &Kernel<S>, cert: &DriftCertificate<S>) -> Result<DriftCheck<S>> {
    p.space().check_same(cert.c.space())?;
    let sums = p.apply_weight_abs(&cert.w)?;
    let r1_inv = S::one() / cert.r1;
    let mut pass = true;
    let mut worst_x = 0usize;
    let mut worst_excess = S::neg_infinity();
    let mut worst_lhs = S::zero();
    let mut worst_rhs = S::zero();
    for (x, s) in sums.iter().enumerate() {
        if !s.hi.is_finite() {
            return Err(Error::IncompatibleTail);
        }
        let rhs = if cert.c.contains(x) {
            r1_inv * cert.eta
        } else {
            r1_inv * cert.w.values()[x]
        };
        let slack = S::lit(64.0) * S::epsilon() * rhs.max(S::one());
        let excess = s.hi - rhs;
        let rel = excess / rhs.max(S::min_positive_value());
        if rel > worst_excess {
            worst_excess = rel;
            worst_x = x;
            worst_lhs = s.hi;
            worst_rhs = rhs;
        }
        if excess > slack {
            pass = false;
        }
    }
    Ok(DriftCheck {
        pass,
        worst_x,
        worst_excess,
        worst_lhs,
        worst_rhs,
        implied_global: (r1_inv, r1_inv * cert.eta),
    })
}

/// Minorization certificate: `T_{nu,alpha}` is Markov on the rows of `C`
/// and `P(x, .) >= b T(x, .)` for `x` in `C`.
#[derive(Clone, Debug)]
pub struct MinorizationCertificate<S: Scalar> {
    c: StateSet,
    b: S,
    t: DensityKernel<S>,
}

impl<S: Scalar> MinorizationCertificate<S> {
    pub fn new(c: StateSet, b: S, nu: AtomicMeasure<S>, alpha: Vec<Vec<S>>) -> Result<Self> {
        if !(b > S::zero() && b <= S::one()) {
            return Err(Error::Invalid(
                "minorization constant must lie in (0, 1]".into(),
            ));
        }
        c.space().check_same(nu.space())?;
        let t = DensityKernel::new(nu, c.states().to_vec(), alpha, None)?;
        for (i, &x) in c.states().iter().enumerate() {
            let mass = t.row_mass(i);
            if (mass.midpoint() - S::one()).abs() > S::lit(32.0) * S::eq_tol() {
                return Err(Error::NotMarkov {
                    row: x,
                    mass: mass.midpoint().to_f64(),
                });
            }
        }
        Ok(MinorizationCertificate { c, b, t })
    }

    /// `alpha = 1`: every `T(x, .)` row is `nu` itself.
    pub fn with_unit_density(c: StateSet, b: S, nu: AtomicMeasure<S>) -> Result<Self> {
        let alpha = vec![vec![S::one(); nu.entries().len()]; c.len()];
        Self::new(c, b, nu, alpha)
    }

    pub fn c(&self) -> &StateSet {
        &self.c
    }
    pub fn b(&self) -> S {
        self.b
    }
    pub fn nu(&self) -> &AtomicMeasure<S> {
        self.t.nu()
    }
    pub fn density(&self) -> &DensityKernel<S> {
        &self.t
    }

    /// Row of `T` for the `i`-th state of `C`.
    pub fn t_row(&self, i: usize) -> AtomicMeasure<S> {
        self.t.row_measure(i)
    }
}

/// Entrywise minorization check plus the Markov-row and
/// uniform-integrability gates (the latter on `alpha^(w)`).
pub fn verify_minorization<S: Scalar>(
    p: &Kernel<S>,
    cert: &MinorizationCertificate<S>,
    w: &WeightFn<S>,
) -> Result<()> {
    p.space().check_same(cert.c.space())?;
    for (i, &x) in cert.c.states().iter().enumerate() {
        let t_row = cert.t_row(i);
        for &(y, tv) in t_row.entries() {
            let pv = p.row(x).weight_at(y);
            let need = cert.b * tv;
            let slack = S::lit(64.0) * S::epsilon() * need.max(S::one());
            if pv + slack < need {
                return Err(Error::NotMinorized {
                    x,
                    y,
                    p: pv.to_f64(),
                    bt: need.to_f64(),
                });
            }
        }
    }
    let weighted = cert.t.clone().with_weight(w.clone())?;
    let cutoff = S::lit(UI_CUTOFF);
    let tol = S::lit(UI_TOL);
    let tail = ui_tail(&weighted, cutoff)?;
    if tail > tol {
        return Err(Error::NotUniformlyIntegrable {
            tail: tail.to_f64(),
            tol: tol.to_f64(),
            cutoff: cutoff.to_f64(),
        });
    }
    Ok(())
}

/// Split kernel `P_0`: equal to `P` off `C`; on `C` the conditional
/// remainder `(P - b T)/(1 - b)`, or the identity row when `b = 1`.
pub fn split_kernel<S: Scalar>(
    p: &Kernel<S>,
    cert: &MinorizationCertificate<S>,
    w: &WeightFn<S>,
) -> Result<Kernel<S>> {
    verify_minorization(p, cert, w)?;
    let space = p.space();
    let absorbing = cert.b == S::one();
    let mut rows = Vec::with_capacity(space.window_len());
    for x in 0..space.window_len() {
        if !cert.c.contains(x) {
            rows.push(p.row(x).clone());
            continue;
        }
        if absorbing {
            rows.push(AtomicMeasure::dirac(space, x));
            continue;
        }
        let i = cert
            .c
            .states()
            .iter()
            .position(|&s| s == x)
            .expect("state in C");
        let t_row = cert.t_row(i);
        let diff = p.row(x).add_scaled(-cert.b, &t_row)?;
        let inv = S::one() / (S::one() - cert.b);
        // Clamp cancellation noise; genuine negativity was rejected by
        // the minorization check.
        let entries = diff
            .entries()
            .iter()
            .map(|&(y, v)| (y, (v * inv).max(S::zero())))
            .collect();
        rows.push(AtomicMeasure::new(space, entries, diff.tail_bound() * inv)?);
    }
    Kernel::new(space, rows, p.is_markov())
}

/// The renewal engine: a Markov kernel with verified drift and
/// minorization certificates over the same small set, its split kernel,
/// and the renewal quantities built from them.
pub struct SplitEngine<S: Scalar> {
    p: Kernel<S>,
    drift: DriftCertificate<S>,
    minor: MinorizationCertificate<S>,
    p0: Kernel<S>,
}

impl<S: Scalar> SplitEngine<S> {
    pub fn new(
        p: Kernel<S>,
        drift: DriftCertificate<S>,
        minor: MinorizationCertificate<S>,
    ) -> Result<Self> {
        if !p.is_markov() {
            return Err(Error::Invalid(
                "the split engine needs a Markov kernel".into(),
            ));
        }
        if drift.c() != minor.c() {
            return Err(Error::Invalid(
                "drift and minorization certificates must share the same set C".into(),
            ));
        }
        let check = verify_drift(&p, &drift)?;
        if !check.pass {
            return Err(Error::DriftViolated {
                x: check.worst_x,
                lhs: check.worst_lhs.to_f64(),
                rhs: check.worst_rhs.to_f64(),
            });
        }
        let p0 = split_kernel(&p, &minor, drift.w())?;
        Ok(SplitEngine {
            p,
            drift,
            minor,
            p0,
        })
    }

    pub fn p(&self) -> &Kernel<S> {
        &self.p
    }
    pub fn p0(&self) -> &Kernel<S> {
        &self.p0
    }
    pub fn drift(&self) -> &DriftCertificate<S> {
        &self.drift
    }
    pub fn minor(&self) -> &MinorizationCertificate<S> {
        &self.minor
    }

    /// Hitting brackets `E_x[r^sigma_C]` under the chain dynamics (the
    /// split chain agrees with `P` off `C`, so these serve both).
    pub fn hitting(&self, r: S) -> Result<HittingBrackets<S>> {
        hitting_gf(&self.p, self.drift.c(), r, Some(self.drift.w()))
    }

    /// Return-time generating function
    /// `h(r) = sup_{x in C} int P_0(x, dy) r E_y[r^sigma]` as a certified
    /// interval; exactly `[r, r]` when `b = 1` (C is absorbing for the
    /// split chain).
    pub fn h_of_r(&self, r: S) -> Result<Interval<S>> {
        if r < S::zero() || r > self.drift.r1 * (S::one() + S::lit(64.0) * S::epsilon()) {
            return Err(Error::Invalid("h(r) needs 0 <= r <= r1".into()));
        }
        if self.minor.b == S::one() {
            return Ok(Interval::point(r));
        }
        let brackets = self.hitting(r)?;
        let w = self.drift.w();
        let mut out = Interval::point(S::zero());
        for &x in self.minor.c.states() {
            let row = self.p0.row(x);
            let mut acc = Interval::zero();
            for &(y, q) in row.entries() {
                let qi = Interval::point(q);
                if self.minor.c.contains(y) {
                    acc = acc.add(qi);
                } else if self.p.space().in_window(y) {
                    acc = acc.add(qi.mul(Interval::new(brackets.lo[y], brackets.hi[y])));
                } else {
                    acc = acc.add(qi.mul(Interval::new(S::zero(), w.at(y)?)));
                }
            }
            if row.tail_bound() > S::zero() {
                acc = Interval::new(acc.lo, S::infinity());
            }
            out = out.max_pair(acc.scale(r).widen_ulp());
        }
        Ok(out)
    }

    /// Bisection for `r_b = sup { r <= r1 : h(r) < 1/(1-b) }` with the
    /// final essential-radius bound `r_e^w <= 1/r_b`.
    pub fn compute_rb(&self, opts: &RbOptions<S>) -> Result<RenewalProfile<S>> {
        let r1 = self.drift.r1;
        let b = self.minor.b;
        if b == S::one() {
            return Ok(RenewalProfile {
                r1,
                eta: self.drift.eta,
                b,
                eta1: None,
                h_samples: vec![(r1, Interval::point(r1))],
                r_b: Interval::point(r1),
            });
        }
        let threshold = S::one() / (S::one() - b);
        let mut samples: Vec<(S, Interval<S>)> = Vec::new();
        let eval = |r: S, samples: &mut Vec<(S, Interval<S>)>| -> Result<Interval<S>> {
            let h = self.h_of_r(r)?;
            samples.push((r, h));
            Ok(h)
        };

        let h_top = eval(r1, &mut samples)?;
        let one = S::one();
        let (mut lo_feas, mut hi_bound);
        if h_top.hi < threshold {
            lo_feas = r1;
            hi_bound = r1;
        } else {
            let h_one = eval(one, &mut samples)?;
            if !(h_one.hi < threshold) {
                return Err(Error::Inconclusive(format!(
                    "h(1) bracket [{}, {}] does not certify the threshold {}",
                    h_one.lo.to_f64(),
                    h_one.hi.to_f64(),
                    threshold.to_f64()
                )));
            }
            lo_feas = one;
            hi_bound = r1;
            for _ in 0..opts.max_iters {
                if hi_bound - lo_feas <= opts.r_tol * r1 {
                    break;
                }
                let mid = (lo_feas + hi_bound) * S::lit(0.5);
                let h_mid = eval(mid, &mut samples)?;
                if h_mid.hi < threshold {
                    lo_feas = mid;
                } else if h_mid.lo >= threshold {
                    hi_bound = mid;
                } else if hi_bound - lo_feas <= S::lit(64.0) * opts.r_tol * r1 {
                    break;
                } else {
                    return Err(Error::Inconclusive(format!(
                        "h bracket [{}, {}] straddles the threshold {} at r = {}",
                        h_mid.lo.to_f64(),
                        h_mid.hi.to_f64(),
                        threshold.to_f64(),
                        mid.to_f64()
                    )));
                }
            }
        }
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        samples.dedup_by(|a, b| a.0 == b.0);
        // h is a supremum of power series with nonnegative coefficients,
        // so the stored samples must be compatible with monotonicity.
        for pair in samples.windows(2) {
            if pair[0].1.lo > pair[1].1.hi {
                return Err(Error::Invalid(format!(
                    "h samples violate monotonicity between r = {} and r = {}",
                    pair[0].0.to_f64(),
                    pair[1].0.to_f64()
                )));
            }
        }
        let eta1 = Some(r1.max(self.drift.eta / (S::one() - b)));
        Ok(RenewalProfile {
            r1,
            eta: self.drift.eta,
            b,
            eta1,
            h_samples: samples,
            r_b: Interval::new(lo_feas, hi_bound),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RbOptions<S: Scalar> {
    pub r_tol: S,
    pub max_iters: usize,
}

impl<S: Scalar> Default for RbOptions<S> {
    fn default() -> Self {
        RbOptions {
            r_tol: S::lit(1e-12),
            max_iters: 80,
        }
    }
}

/// The renewal data around `r_b`: sampled `h` values, the majorant
/// `m(r)`, and the series bounds `M(r)`, `M_w(r)`.
#[derive(Clone, Debug)]
pub struct RenewalProfile<S: Scalar> {
    pub r1: S,
    pub eta: S,
    pub b: S,
    /// `max(r1, eta/(1-b))`; absent for `b = 1` where the absorbing
    /// branch bypasses the majorant entirely.
    pub eta1: Option<S>,
    pub h_samples: Vec<(S, Interval<S>)>,
    pub r_b: Interval<S>,
}

impl<S: Scalar> RenewalProfile<S> {
    /// `m(r) = r1 eta1 / (r1 - max(r, 1))^2` for `r < r1`.
    pub fn m_of(&self, r: S) -> Result<S> {
        let eta1 = self.eta1.ok_or_else(|| {
            Error::Invalid("m(r) is bypassed for b = 1 (h(r) = r exactly)".into())
        })?;
        let gap = self.r1 - r.max(S::one());
        if !(gap > S::zero()) {
            return Err(Error::Invalid("m(r) needs r < r1".into()));
        }
        Ok(self.r1 * eta1 / (gap * gap))
    }

    /// `M(r) = m(r) / (1 - (1-b) h(r))` for `r < r_b`.
    pub fn big_m_of(&self, r: S, h_r: Interval<S>) -> Result<Interval<S>> {
        let m = self.m_of(r)?;
        let denom_lo = S::one() - (S::one() - self.b) * h_r.hi;
        let denom_hi = S::one() - (S::one() - self.b) * h_r.lo;
        if !(denom_lo > S::zero()) {
            return Err(Error::Invalid("M(r) needs (1-b) h(r) < 1".into()));
        }
        Ok(Interval::point(m).div(Interval::new(denom_lo, denom_hi)))
    }

    /// `M_w(r) = r1/(r1 - r) (1 + (eta/r1) r M(r))`.
    pub fn big_mw_of(&self, r: S, big_m: Interval<S>) -> Result<Interval<S>> {
        if !(r < self.r1) {
            return Err(Error::Invalid("M_w(r) needs r < r1".into()));
        }
        let front = Interval::point(self.r1).div(Interval::point(self.r1 - r));
        let inner = Interval::point(S::one()).add(big_m.scale(self.eta / self.r1).scale(r));
        Ok(front.mul(inner))
    }

    /// Certified interval for the essential-radius bound `1/r_b`.
    pub fn ess_bound(&self) -> Interval<S> {
        self.r_b.recip()
    }

    /// Multiplier variant: `r_e^w(P_chi) <= |chi| / r_b`.
    pub fn chi_bound(&self, chi_norm: S) -> S {
        (chi_norm / self.r_b.lo).next_up()
    }
}

/// Residual kernel `S = P - b 1_C T` materialized over the window.
pub fn residual_kernel<S: Scalar>(
    p: &Kernel<S>,
    cert: &MinorizationCertificate<S>,
) -> Result<Kernel<S>> {
    let space = p.space();
    let mut rows = Vec::with_capacity(space.window_len());
    for x in 0..space.window_len() {
        if let Some(i) = cert.c().states().iter().position(|&s| s == x) {
            rows.push(p.row(x).add_scaled(-cert.b(), &cert.t_row(i))?);
        } else {
            rows.push(p.row(x).clone());
        }
    }
    Kernel::new(space, rows, false)
}

/// Both sides of the renewal identity `S^n(x, E) = E_x[(1-b)^{N_n}]`:
/// the left via matrix powers of the residual kernel, the right via
/// exhaustive path enumeration under the split chain (`0^0 = 1` when
/// `b = 1`).
pub fn renewal_identity<S: Scalar>(
    p: &Kernel<S>,
    cert: &MinorizationCertificate<S>,
    w: &WeightFn<S>,
    x: usize,
    n: usize,
) -> Result<(S, S)> {
    if !p.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    let states = p.space().window_len();
    if states > 8 || n > 16 {
        return Err(Error::SizeLimit(states.max(n), 16));
    }
    let s_kernel = residual_kernel(p, cert)?;
    // lhs: iterate v <- S v from v = 1.
    let mut v = vec![S::one(); states];
    for _ in 0..n {
        let mut next = vec![S::zero(); states];
        for (xx, row) in s_kernel.rows().iter().enumerate() {
            let mut acc = S::zero();
            for &(y, q) in row.entries() {
                acc += q * v[y];
            }
            next[xx] = acc;
        }
        v = next;
    }
    let lhs = v[x];

    // rhs: depth-first enumeration of all length-n split-chain paths.
    let p0 = split_kernel(p, cert, w)?;
    let dense = p0.to_dense();
    let in_c: Vec<bool> = (0..states).map(|s| cert.c().contains(s)).collect();
    let one_minus_b = S::one() - cert.b();
    fn dfs<S: Scalar>(
        dense: &[Vec<S>],
        in_c: &[bool],
        omb: S,
        state: usize,
        depth_left: usize,
        prob: S,
        disc: S,
    ) -> S {
        if depth_left == 0 {
            return prob * disc;
        }
        let disc_next = if in_c[state] { disc * omb } else { disc };
        if disc_next == S::zero() {
            // Every continuation of this path contributes zero; the
            // remaining probability mass factors out.
            return S::zero();
        }
        let mut acc = S::zero();
        for (y, &q) in dense[state].iter().enumerate() {
            if q > S::zero() {
                acc += dfs(dense, in_c, omb, y, depth_left - 1, prob * q, disc_next);
            }
        }
        acc
    }
    let rhs = dfs(&dense, &in_c, one_minus_b, x, n, S::one(), S::one());
    Ok((lhs, rhs))
}

/// Truncated generating-function suite with certified remainders, and the
/// checks tying them together.
#[derive(Clone, Debug)]
pub struct GfSuite<S: Scalar> {
    /// `H_k^x(r) = E_x[r^{rho_k}]`, `k = 0..=k_max`.
    pub h_k: Vec<Interval<S>>,
    /// `L_k^x(r) = sum_n r^n P[N_n = k]`.
    pub l_k: Vec<Interval<S>>,
    /// `G^x(r)` via the renewal series `sum_k (1-b)^k L_k`.
    pub g: Interval<S>,
    /// `G^x(r)` via direct powers `sum_n r^n S^n(x, E)`.
    pub g_direct: Interval<S>,
    /// `G_w^x(r) = sum_n r^n S^n w(x)/w(x)`.
    pub g_w: Interval<S>,
    pub h_r: Interval<S>,
    pub checks: GfChecks,
}

#[derive(Clone, Copy, Debug)]
pub struct GfChecks {
    /// `H_k <= w(x) h(r)^k`.
    pub h_k_dominated: bool,
    /// The renewal-series `G` and the power-series `G` overlap.
    pub g_routes_consistent: bool,
    /// `(1 - r/r1) G_w <= 1 + (eta/r1) r G / w(x)`.
    pub g_w_inequality: bool,
    /// `0 <= h(r) - 1 <= (r - 1) m(r)` (skipped for b = 1).
    pub h_slope: Option<bool>,
}

pub fn gf_suite<S: Scalar>(
    engine: &SplitEngine<S>,
    x: usize,
    r: S,
    k_max: usize,
    n_max: usize,
) -> Result<GfSuite<S>> {
    let p = engine.p();
    if !p.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    let states = p.space().window_len();
    if states > 256 {
        return Err(Error::SizeLimit(states, 256));
    }
    let r1 = engine.drift().r1();
    if !(r < r1) {
        return Err(Error::Invalid("gf_suite needs r < r1".into()));
    }
    let b = engine.minor().b();
    let w = engine.drift().w();
    let wx = w.values()[x];

    // Distribution of (Z_d, N_d) under the split chain.
    let p0 = engine.p0().to_dense();
    let in_c: Vec<bool> = (0..states)
        .map(|s| engine.minor().c().contains(s))
        .collect();
    let kcap = k_max + 1;
    let mut mu = vec![vec![S::zero(); kcap + 1]; states];
    mu[x][0] = S::one();
    let mut p_rho: Vec<Vec<S>> = vec![Vec::with_capacity(n_max + 1); kcap];
    let mut p_nk: Vec<Vec<S>> = vec![Vec::with_capacity(n_max + 1); kcap];
    for _d in 0..=n_max {
        for k in 0..kcap {
            let mut rho_mass = S::zero();
            let mut nk_mass = S::zero();
            for y in 0..states {
                if in_c[y] {
                    rho_mass += mu[y][k];
                }
                nk_mass += mu[y][k];
            }
            p_rho[k].push(rho_mass);
            p_nk[k].push(nk_mass);
        }
        let mut next = vec![vec![S::zero(); kcap + 1]; states];
        for y in 0..states {
            for k in 0..=kcap {
                let m = mu[y][k];
                if m == S::zero() {
                    continue;
                }
                let k_next = (k + usize::from(in_c[y])).min(kcap);
                for (y2, &q) in p0[y].iter().enumerate() {
                    if q > S::zero() {
                        next[y2][k_next] += m * q;
                    }
                }
            }
        }
        mu = next;
    }

    let h_top = engine.h_of_r(r1)?;
    let h_r = engine.h_of_r(r)?;
    let ratio = r / r1;
    let geo_tail = ratio.powi(n_max as i32 + 1) / (S::one() - ratio);

    let series = |coeffs: &[S]| -> S {
        let mut acc = S::zero();
        let mut rn = S::one();
        for &c in coeffs {
            acc += c * rn;
            rn *= r;
        }
        acc
    };

    let mut h_k = Vec::with_capacity(kcap);
    let mut l_k = Vec::with_capacity(kcap);
    for k in 0..kcap {
        let h_sum = series(&p_rho[k]);
        let h_rem = sum_upper(wx * h_top.hi.powi(k as i32) * geo_tail, 4);
        h_k.push(Interval::new(
            sum_lower(h_sum, n_max + 1),
            sum_upper(h_sum, n_max + 1) + h_rem,
        ));
        let l_sum = series(&p_nk[k]);
        let l_rem = sum_upper(wx * h_top.hi.powi(k as i32 + 1) * geo_tail, 4);
        l_k.push(Interval::new(
            sum_lower(l_sum, n_max + 1),
            sum_upper(l_sum, n_max + 1) + l_rem,
        ));
    }

    // Renewal route for G.
    let mut g = Interval::zero();
    let omb = S::one() - b;
    let mut factor = S::one();
    for lk in l_k.iter() {
        g = g.add(lk.scale(factor));
        factor *= omb;
    }
    let g_k_tail = if b == S::one() {
        S::zero()
    } else {
        let q = omb * h_r.hi;
        if !(q < S::one()) {
            return Err(Error::Inconclusive(
                "(1-b) h(r) >= 1: r is not below r_b, the renewal series may diverge".into(),
            ));
        }
        // L_k <= w(x) h(r)^k m(r): geometric tail over k > k_max.
        let profile_m = {
            let eta1 = r1.max(engine.drift().eta() / omb);
            r1 * eta1 / ((r1 - r.max(S::one())) * (r1 - r.max(S::one())))
        };
        sum_upper(
            wx * profile_m * q.powi(k_max as i32 + 1) / (S::one() - q),
            8,
        )
    };
    g = Interval::new(g.lo, g.hi + g_k_tail);

    // Direct route for G and for G_w via powers of the residual kernel.
    let s_kernel = residual_kernel(p, engine.minor())?;
    let mut v1 = vec![S::one(); states];
    let mut vw: Vec<S> = w.values().to_vec();
    let mut g_direct_sum = S::zero();
    let mut g_w_sum = S::zero();
    let mut rn = S::one();
    let mut sup_ratio_history: Vec<S> = Vec::with_capacity(n_max + 1);
    for _ in 0..=n_max {
        g_direct_sum += rn * v1[x];
        g_w_sum += rn * vw[x] / wx;
        let ratio_n = vw
            .iter()
            .zip(w.values())
            .map(|(&a, &b2)| a / b2)
            .fold(S::zero(), S::max);
        sup_ratio_history.push(ratio_n);
        let step = |v: &[S]| -> Vec<S> {
            (0..states)
                .map(|xx| {
                    let mut acc = S::zero();
                    for &(y, q) in s_kernel.row(xx).entries() {
                        acc += q * v[y];
                    }
                    acc
                })
                .collect()
        };
        v1 = step(&v1);
        vw = step(&vw);
        rn *= r;
    }
    // Geometric remainders from the last computed weighted norm.
    let beta = sup_ratio_history
        .last()
        .copied()
        .unwrap_or(S::one())
        .powf(S::one() / S::lit(n_max as f64));
    let rem = if r * beta < S::one() {
        let c_m = sup_ratio_history
            .iter()
            .enumerate()
            .map(|(s, &v)| v / beta.powi(s as i32))
            .fold(S::zero(), S::max);
        let q = r * beta;
        sum_upper(c_m * q.powi(n_max as i32 + 1) / (S::one() - q), 8)
    } else {
        return Err(Error::Inconclusive(
            "residual power norms do not contract at this r; raise n_max".into(),
        ));
    };
    // rem bounds sum_{n > n_max} r^n ||S^n||_w; the unweighted tail picks
    // up a factor w(x) through S^n 1 <= S^n w.
    let g_direct = Interval::new(
        sum_lower(g_direct_sum, n_max + 1),
        sum_upper(g_direct_sum, n_max + 1) + sum_upper(rem * wx, 2),
    );
    let g_w = Interval::new(
        sum_lower(g_w_sum, n_max + 1),
        sum_upper(g_w_sum, n_max + 1) + rem,
    );

    // The four lemma checks.
    let slack = S::lit(1e-9);
    let mut h_k_dominated = true;
    for (k, hk) in h_k.iter().enumerate() {
        if hk.lo > wx * h_r.hi.powi(k as i32) * (S::one() + slack) + slack {
            h_k_dominated = false;
        }
    }
    let g_routes_consistent = g.lo <= g_direct.hi + slack && g_direct.lo <= g.hi + slack;
    let lhs = Interval::point(S::one() - ratio).mul(g_w);
    let rhs = Interval::point(S::one()).add(
        g.scale(engine.drift().eta() / r1)
            .scale(r)
            .div(Interval::point(wx)),
    );
    let g_w_inequality = lhs.lo <= rhs.hi + slack;
    let h_slope = if b == S::one() {
        None
    } else {
        let eta1 = r1.max(engine.drift().eta() / omb);
        let m_r = r1 * eta1 / ((r1 - r.max(S::one())) * (r1 - r.max(S::one())));
        let lower_ok = h_r.hi >= S::one() - slack;
        let upper_ok = if r >= S::one() {
            h_r.lo - S::one() <= (r - S::one()) * m_r + slack
        } else {
            true
        };
        Some(lower_ok && upper_ok)
    };

    Ok(GfSuite {
        h_k,
        l_k,
        g,
        g_direct,
        g_w,
        h_r,
        checks: GfChecks {
            h_k_dominated,
            g_routes_consistent,
            g_w_inequality,
            h_slope,
        },
    })
}

/// Two-sided brackets on the minimal drift function
/// `w1(x) = E_x[r1^sigma_C]`, packaged as weight functions. The lower
/// solve kills window-exiting paths; the upper one prices exits at the
/// reference weight (valid by the drift bound `E_y[r1^sigma] <= w(y)`).
/// `w1 = 1` on `C` where `sigma = 0`.
pub fn minimal_drift<S: Scalar>(
    p: &Kernel<S>,
    c: &StateSet,
    r1: S,
    reference: Option<&WeightFn<S>>,
) -> Result<(WeightFn<S>, WeightFn<S>)> {
    if !(r1 >= S::one()) {
        return Err(Error::Invalid("minimal drift needs r1 >= 1".into()));
    }
    let br = hitting_gf(p, c, r1, reference)?;
    if br.hi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergent);
    }
    let lo_vals: Vec<S> = br.lo.iter().map(|&v| v.max(S::one())).collect();
    let hi_vals: Vec<S> = br.hi.iter().map(|&v| v.max(S::one())).collect();
    let tail = reference.and_then(|w| w.tail_model());
    Ok((
        WeightFn::new(p.space(), lo_vals, None)?,
        WeightFn::new(p.space(), hi_vals, tail)?,
    ))
}

/// Witness that `C` is small: `P^m(x, .) >= b nu` for all `x` in `C`.
#[derive(Clone, Debug)]
pub struct SmallSetWitness<S: Scalar> {
    pub m: usize,
    pub b: S,
    pub nu: AtomicMeasure<S>,
}

#[derive(Clone, Copy, Debug)]
pub enum FosterStrategy<S: Scalar> {
    /// Use `C` directly (requires the witness power `m = 1`).
    Direct,
    /// Level-set construction aiming at drift rate `rho_bar`.
    LevelSet { rho_bar: S },
}

#[derive(Clone, Debug)]
pub struct FosterOutput<S: Scalar> {
    /// The kernel power the certificates apply to.
    pub power: usize,
    pub t0: Option<S>,
    pub t: Option<S>,
    pub k_t: Option<usize>,
    pub minor_const: S,
    pub drift: DriftCertificate<S>,
    pub minor: MinorizationCertificate<S>,
}

/// Convert Foster-Lyapunov data `P w <= rho w + zeta 1_C` plus a small-set
/// witness into drift/minorization certificates, either directly on `C`
/// or through the level set `C_t = {w <= t}` with the return-probability
/// constant `b/(2(k_t + 1))`.
pub fn foster_to_small<S: Scalar>(
    p: &Kernel<S>,
    w: &WeightFn<S>,
    c: &StateSet,
    rho: S,
    zeta: S,
    witness: &SmallSetWitness<S>,
    strategy: FosterStrategy<S>,
) -> Result<FosterOutput<S>> {
    if !(rho > S::zero() && rho < S::one()) || zeta < S::zero() {
        return Err(Error::Invalid("need 0 < rho < 1 and zeta >= 0".into()));
    }
    // Verify (a'): Pw <= rho w + zeta 1_C pointwise.
    let sums = p.apply_weight_abs(w)?;
    for (x, s) in sums.iter().enumerate() {
        let rhs = rho * w.values()[x] + if c.contains(x) { zeta } else { S::zero() };
        let slack = S::lit(64.0) * S::epsilon() * rhs.max(S::one());
        if s.hi > rhs + slack {
            return Err(Error::DriftViolated {
                x,
                lhs: s.hi.to_f64(),
                rhs: rhs.to_f64(),
            });
        }
    }
    // Verify the small-set witness on C.
    let pm = p.power(witness.m)?;
    for &x in c.states() {
        for &(y, nv) in witness.nu.entries() {
            let need = witness.b * nv;
            let slack = S::lit(64.0) * S::epsilon() * need.max(S::one());
            if pm.row(x).weight_at(y) + slack < need {
                return Err(Error::NotMinorized {
                    x,
                    y,
                    p: pm.row(x).weight_at(y).to_f64(),
                    bt: need.to_f64(),
                });
            }
        }
    }

    match strategy {
        FosterStrategy::Direct => {
            if witness.m != 1 {
                return Err(Error::Invalid(
                    "direct strategy needs a one-step witness; use the level-set route".into(),
                ));
            }
            // Pw <= rho w 1_{C^c} + (rho beta + zeta) 1_C with beta = sup_C w.
            let beta = c
                .states()
                .iter()
                .map(|&x| w.values()[x])
                .fold(S::zero(), S::max);
            let r1 = S::one() / rho;
            let eta = (rho * beta + zeta) * r1;
            let drift = DriftCertificate::new(c.clone(), w.clone(), r1, eta)?;
            let minor = MinorizationCertificate::with_unit_density(
                c.clone(),
                witness.b,
                witness.nu.clone(),
            )?;
            Ok(FosterOutput {
                power: 1,
                t0: None,
                t: None,
                k_t: None,
                minor_const: witness.b,
                drift,
                minor,
            })
        }
        FosterStrategy::LevelSet { rho_bar } => {
            if !(rho_bar > rho && rho_bar < S::one()) {
                return Err(Error::Invalid("need rho < rho_bar < 1".into()));
            }
            // rho + zeta/((1-rho) t0) = rho_bar.
            let t0 = zeta / ((S::one() - rho) * (rho_bar - rho));
            let t = t0.max(S::one());
            let c_t: Vec<usize> = (0..p.space().window_len())
                .filter(|&x| w.values()[x] <= t)
                .collect();
            if c_t.is_empty() {
                return Err(Error::NotFound(format!(
                    "level set {{w <= {}}} is empty",
                    t.to_f64()
                )));
            }
            let c_t = StateSet::new(p.space(), c_t)?;
            let zeta_t = rho * t + zeta / (S::one() - rho);
            // Smallest k with t rho^(k+1) <= 1/2, so that
            // P_x[sigma_C <= k_t] >= 1/2 on C_t.
            let mut k_t = 0usize;
            let mut tp = t * rho;
            while tp > S::lit(0.5) {
                k_t += 1;
                tp *= rho;
                if k_t > 100_000 {
                    return Err(Error::NotFound("k_t search did not terminate".into()));
                }
            }
            let minor_const = witness.b / (S::lit(2.0) * S::lit((k_t + 1) as f64));
            // A single power k + m must minorize all of C_t at once.
            let mut found: Option<(usize, Kernel<S>)> = None;
            let mut pk = p.power(witness.m)?;
            for k in 0..=k_t {
                let ok = c_t.states().iter().all(|&x| {
                    witness.nu.entries().iter().all(|&(y, nv)| {
                        pk.row(x).weight_at(y)
                            >= minor_const * nv * (S::one() - S::lit(64.0) * S::epsilon())
                    })
                });
                if ok {
                    found = Some((k + witness.m, pk));
                    break;
                }
                pk = pk.compose(p)?;
            }
            let (power, _pk) = found.ok_or_else(|| {
                Error::NotFound(
                    "no single power k + m minorizes all of C_t (per-state petite structure only)"
                        .into(),
                )
            })?;
            let r1 = S::one() / rho_bar;
            let eta = zeta_t * r1;
            let drift = DriftCertificate::new(c_t.clone(), w.clone(), r1, eta)?;
            let minor =
                MinorizationCertificate::with_unit_density(c_t, minor_const, witness.nu.clone())?;
            Ok(FosterOutput {
                power,
                t0: Some(t0),
                t: Some(t),
                k_t: Some(k_t),
                minor_const,
                drift,
                minor,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisOutput<S: Scalar> {
    pub n: usize,
    pub rho_fit: S,
    pub drift: DriftCertificate<S>,
    pub minor: MinorizationCertificate<S>,
}

/// Certificate synthesis on a finite space: search `n` upward, take `nu`
/// as the normalized row average of `P^n`, the full density as `alpha`
/// (every row is absolutely continuous against the average), and fit the
/// decay rate from the oracle's subdominant modulus plus a margin.
pub fn synthesize_certificates<S: Scalar>(
    p: &Kernel<S>,
    w: &WeightFn<S>,
    t: S,
    b: S,
    n_cap: usize,
) -> Result<SynthesisOutput<S>> {
    if !p.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    if !(b > S::zero() && b < S::one()) {
        return Err(Error::Invalid("synthesis needs 0 < b < 1".into()));
    }
    if !(t >= S::one()) {
        return Err(Error::Invalid("synthesis needs t >= 1".into()));
    }
    let states = p.space().window_len();
    let c_t: Vec<usize> = (0..states).filter(|&x| w.values()[x] <= t).collect();
    if c_t.is_empty() {
        return Err(Error::NotFound("level set {w <= t} is empty".into()));
    }
    let c_t = StateSet::new(p.space(), c_t)?;
    let full_level_set = c_t.is_full();

    let rho_fit = if full_level_set {
        // Condition (i) is vacuous off an empty complement; any rate works.
        S::lit(0.5)
    } else {
        let spectrum = eigen_oracle(p, Some(w))?;
        match subdominant_modulus(&spectrum, S::lit(1e-9)) {
            Some(s) if s + S::lit(0.01) < S::one() => s + S::lit(0.01),
            Some(_) => {
                return Err(Error::NotFound(
                    "subdominant modulus too close to 1 (periodic class structure?)".into(),
                ))
            }
            None => {
                return Err(Error::NotFound(
                    "every eigenvalue is peripheral; no decay rate to fit".into(),
                ))
            }
        }
    };

    let mut pn = p.clone();
    let mut worst = (0usize, S::zero());
    for n in 1..=n_cap {
        // nu = normalized average of the rows of P^n.
        let mut avg = AtomicMeasure::zero(p.space());
        for x in 0..states {
            avg = avg.add_scaled(S::one() / S::lit(states as f64), pn.row(x))?;
        }
        let nu = avg.normalized()?;

        // (i): P^n w <= eta 1_{C_t} + rho^n w off C_t.
        let sums = pn.apply_weight_abs(w)?;
        let rho_n = rho_fit.powi(n as i32);
        let mut ok = true;
        let mut eta_on_c = S::zero();
        for x in 0..states {
            if c_t.contains(x) {
                eta_on_c = eta_on_c.max(sums[x].hi);
            } else {
                let allowed = rho_n * w.values()[x];
                if sums[x].hi > allowed * (S::one() + S::lit(64.0) * S::epsilon()) {
                    ok = false;
                    if sums[x].hi - allowed > worst.1 {
                        worst = (x, sums[x].hi - allowed);
                    }
                }
            }
        }
        if ok {
            // (ii): T = P^n itself (alpha the full density), so the
            // minorization P^n >= b 1_{C_t} T holds with any b < 1.
            let (dk, sing) = crate::decompose::kernel_decompose(&pn, &nu)?;
            if sing.sup_norm() > S::zero() {
                return Err(Error::NotFound(
                    "rows are not absolutely continuous against the row average".into(),
                ));
            }
            let alpha_rows: Vec<Vec<S>> = c_t
                .states()
                .iter()
                .map(|&x| dk.alpha()[x].clone())
                .collect();
            let minor = MinorizationCertificate::new(c_t.clone(), b, nu, alpha_rows)?;
            let r1 = S::one() / rho_n;
            let eta = eta_on_c * r1;
            let drift = DriftCertificate::new(c_t.clone(), w.clone(), r1, eta)?;
            return Ok(SynthesisOutput {
                n,
                rho_fit,
                drift,
                minor,
            });
        }
        pn = pn.compose(p)?;
    }
    Err(Error::NotFound(format!(
        "no n <= {n_cap} satisfies the decay condition; worst excess {} at state {}",
        worst.1.to_f64(),
        worst.0
    )))
}
