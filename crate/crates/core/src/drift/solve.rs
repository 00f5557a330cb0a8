//! Certified hitting-time generating functions.
//!
//! For a Markov kernel `P`, a target set `C`, and `r >= 0`, brackets
//! `E_x[r^sigma_C]` over the window. The linear system
//! `u = r P|_{C^c} u + r P(., C)` is solved in `w`-scaled variables by a
//! banded or dense LU factorization; the solutions are then certified by
//! sub/supersolution checks (the operator is monotone and `I - A` is an
//! M-matrix, so any `u` with `u <= Au + b` is below the true solution and
//! any `u >= Au + b_hi` is above it). Paths leaving the window are worth
//! zero in the lower system and `w(exit)` in the upper one.

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::{sum_lower, sum_upper, Scalar};
use crate::space::StateSet;
use crate::weight::WeightFn;

pub struct HittingBrackets<S: Scalar> {
    /// Certified lower bound on `E_x[r^sigma]` per window state.
    pub lo: Vec<S>,
    /// Certified upper bound; infinite when no supersolution exists.
    pub hi: Vec<S>,
}

pub(crate) struct HitSystem<S: Scalar> {
    /// Unknown index -> window state.
    cc: Vec<usize>,
    /// `A_hat` rows: `r P(x, y) w(y)/w(x)` over unknowns.
    rows: Vec<Vec<(usize, S)>>,
    /// `r P(x, C) / w(x)`.
    b_lo: Vec<S>,
    /// `b_lo + r sum_exits P(x, y') w(y')/w(x)`; `None` when an exit
    /// cannot be priced (unlocated tail mass).
    b_hi: Vec<Option<S>>,
    band: usize,
}

fn build_system<S: Scalar>(
    p: &Kernel<S>,
    c: &StateSet,
    r: S,
    w: &WeightFn<S>,
) -> Result<HitSystem<S>> {
    let n = p.space().window_len();
    let mut idx = vec![usize::MAX; n];
    let mut cc = Vec::new();
    for x in 0..n {
        if !c.contains(x) {
            idx[x] = cc.len();
            cc.push(x);
        }
    }
    let mut rows = Vec::with_capacity(cc.len());
    let mut b_lo = Vec::with_capacity(cc.len());
    let mut b_hi = Vec::with_capacity(cc.len());
    let mut band = 0usize;
    for (i, &x) in cc.iter().enumerate() {
        let wx = w.values()[x];
        let row = p.row(x);
        let mut arow = Vec::new();
        let mut blo = S::zero();
        let mut exits = Some(S::zero());
        for &(y, q) in row.entries() {
            if c.contains(y) {
                blo += r * q / wx;
            } else if p.space().in_window(y) {
                let j = idx[y];
                band = band.max(i.abs_diff(j));
                arow.push((j, r * q * w.values()[y] / wx));
            } else {
                // Window exit: zero in the lower system, priced at the
                // extrapolated weight in the upper one.
                match (w.at(y), &mut exits) {
                    (Ok(wy), Some(e)) => *e += r * q * wy / wx,
                    _ => exits = None,
                }
            }
        }
        if row.tail_bound() > S::zero() {
            exits = None;
        }
        rows.push(arow);
        b_lo.push(blo);
        b_hi.push(exits.map(|e| blo + e));
    }
    Ok(HitSystem {
        cc,
        rows,
        b_lo,
        b_hi,
        band,
    })
}

/// `F(u) = A u + b` evaluated in round-to-nearest.
fn eval_op<S: Scalar>(sys: &HitSystem<S>, u: &[S], b: &[S]) -> Vec<S> {
    sys.rows
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut acc = bi;
            for &(j, a) in row {
                acc += a * u[j];
            }
            acc
        })
        .collect()
}

/// Certified check `u <= A u + b` (guarded downward).
fn is_subsolution<S: Scalar>(sys: &HitSystem<S>, u: &[S], b: &[S]) -> bool {
    let f = eval_op(sys, u, b);
    sys.rows
        .iter()
        .zip(&f)
        .zip(u)
        .all(|((row, &fi), &ui)| sum_lower(fi, row.len() + 1) >= ui)
}

/// Certified check `u >= A u + b` (guarded upward).
fn is_supersolution<S: Scalar>(sys: &HitSystem<S>, u: &[S], b: &[S]) -> bool {
    let f = eval_op(sys, u, b);
    sys.rows
        .iter()
        .zip(&f)
        .zip(u)
        .all(|((row, &fi), &ui)| sum_upper(fi, row.len() + 1) <= ui)
}

/// LU solve of `(I - A) u = b` without pivoting inside the band. The
/// matrix is an M-matrix whenever the killed chain is subcritical, so
/// pivots stay positive; a nonpositive pivot or a negative solution
/// signals divergence.
fn solve_banded<S: Scalar>(sys: &HitSystem<S>, b: &[S]) -> Result<Vec<S>> {
    let m = sys.cc.len();
    let band = sys.band;
    let width = 2 * band + 1;
    let mut mat = vec![S::zero(); m * width];
    let at = |i: usize, j: usize| -> usize { i * width + (j + band - i) };
    for i in 0..m {
        mat[at(i, i)] = S::one();
    }
    for (i, row) in sys.rows.iter().enumerate() {
        for &(j, a) in row {
            mat[at(i, j)] -= a;
        }
    }
    let mut rhs = b.to_vec();
    for i in 0..m {
        let piv = mat[at(i, i)];
        if !(piv > S::zero()) {
            return Err(Error::Divergent);
        }
        let j_hi = (i + band).min(m - 1);
        for k in i + 1..=j_hi {
            let f = mat[at(k, i)] / piv;
            if f == S::zero() {
                continue;
            }
            for j in i..=(i + band).min(m - 1) {
                let v = mat[at(i, j)] * f;
                mat[at(k, j)] -= v;
            }
            rhs[k] = rhs[k] - f * rhs[i];
        }
    }
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for j in i + 1..=(i + band).min(m - 1) {
            acc -= mat[at(i, j)] * rhs[j];
        }
        rhs[i] = acc / mat[at(i, i)];
    }
    Ok(rhs)
}

/// Dense LU with partial pivoting.
fn solve_dense<S: Scalar>(sys: &HitSystem<S>, b: &[S]) -> Result<Vec<S>> {
    let m = sys.cc.len();
    let mut a = vec![S::zero(); m * m];
    for i in 0..m {
        a[i * m + i] = S::one();
    }
    for (i, row) in sys.rows.iter().enumerate() {
        for &(j, v) in row {
            a[i * m + j] -= v;
        }
    }
    let mut rhs = b.to_vec();
    for col in 0..m {
        let mut piv_row = col;
        let mut piv_val = a[col * m + col].abs();
        for r2 in col + 1..m {
            let v = a[r2 * m + col].abs();
            if v > piv_val {
                piv_val = v;
                piv_row = r2;
            }
        }
        if piv_val == S::zero() {
            return Err(Error::Divergent);
        }
        if piv_row != col {
            for j in 0..m {
                a.swap(col * m + j, piv_row * m + j);
            }
            rhs.swap(col, piv_row);
        }
        let piv = a[col * m + col];
        for r2 in col + 1..m {
            let f = a[r2 * m + col] / piv;
            if f == S::zero() {
                continue;
            }
            for j in col..m {
                let v = a[col * m + j] * f;
                a[r2 * m + j] -= v;
            }
            rhs[r2] = rhs[r2] - f * rhs[col];
        }
    }
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for j in i + 1..m {
            acc -= a[i * m + j] * rhs[j];
        }
        rhs[i] = acc / a[i * m + i];
    }
    Ok(rhs)
}

fn solve<S: Scalar>(sys: &HitSystem<S>, b: &[S]) -> Result<Vec<S>> {
    let m = sys.cc.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    if sys.band <= 24 {
        solve_banded(sys, b)
    } else if m <= 1200 {
        solve_dense(sys, b)
    } else {
        Err(Error::SizeLimit(m, 1200))
    }
}

/// Monotone Jacobi iterates from zero: every guarded iterate is a
/// certified lower bound for the minimal solution.
fn jacobi_lower<S: Scalar>(sys: &HitSystem<S>, iters: usize) -> Vec<S> {
    let m = sys.cc.len();
    let mut u = vec![S::zero(); m];
    for _ in 0..iters {
        let f = eval_op(sys, &u, &sys.b_lo);
        for i in 0..m {
            u[i] = sum_lower(f[i], sys.rows[i].len() + 1);
        }
    }
    u
}

/// Brackets on `E_x[r^sigma_C]` for every window state.
///
/// `w` prices paths that leave the window in the upper bracket per the
/// minimal-drift bound `E_y[r^sigma] <= w(y)`; without it (or with
/// unlocated tail mass in some row) no finite upper bracket exists and
/// the upper side is infinite.
pub fn hitting_gf<S: Scalar>(
    p: &Kernel<S>,
    c: &StateSet,
    r: S,
    w_ref: Option<&WeightFn<S>>,
) -> Result<HittingBrackets<S>> {
    p.space().check_same(c.space())?;
    if r < S::zero() {
        return Err(Error::Invalid("r must be nonnegative".into()));
    }
    let n = p.space().window_len();
    let w_one;
    let w = match w_ref {
        Some(w) => {
            p.space().check_same(w.space())?;
            w
        }
        None => {
            w_one = WeightFn::one(p.space());
            &w_one
        }
    };
    let sys = build_system(p, c, r, w)?;
    let m = sys.cc.len();

    let mut lo_hat = vec![S::zero(); m];
    let mut hi_hat: Vec<S> = vec![S::infinity(); m];

    if m > 0 {
        // Resolvent row sums (I - A)^{-1} 1 set the correction scale for
        // turning approximate solutions into certified brackets. The
        // subsolution route below is sound only when I - A is a genuine
        // M-matrix; a nonnegative vector with g >= A g + 1 certifies
        // exactly that (the Neumann series is dominated by g), so the
        // inflated green vector doubles as the spectral certificate.
        let ones = vec![S::one(); m];
        let green: Option<Vec<S>> = match solve(&sys, &ones) {
            Ok(g) if g.iter().all(|&v| v >= S::zero()) => {
                let g_up: Vec<S> = g
                    .iter()
                    .map(|&v| v * (S::one() + S::lit(1e-8)) + S::lit(1e-8))
                    .collect();
                if is_supersolution(&sys, &g_up, &ones) {
                    Some(g_up)
                } else {
                    None
                }
            }
            _ => None,
        };

        let mut lower_done = false;
        if let Some(g) = &green {
            if let Ok(cand) = solve(&sys, &sys.b_lo) {
                if cand.iter().all(|&v| v >= S::zero()) {
                    let res_inf = max_residual(&sys, &cand, &sys.b_lo);
                    for &factor in &[S::lit(2.0), S::lit(16.0), S::lit(1024.0)] {
                        let bump = res_inf * factor + S::epsilon() * factor;
                        let u: Vec<S> = cand
                            .iter()
                            .zip(g)
                            .map(|(&v, &gr)| (v - bump * gr).max(S::zero()))
                            .collect();
                        if is_subsolution(&sys, &u, &sys.b_lo) {
                            lo_hat = u;
                            lower_done = true;
                            break;
                        }
                    }
                }
            }
        }
        if !lower_done {
            // Monotone iteration from zero is always a certified lower
            // bound; it diverges exactly when the true value is infinite.
            lo_hat = jacobi_lower(&sys, 4 * m + 512);
            if lo_hat.iter().any(|&v| v > S::lit(1e12)) {
                return Err(Error::Divergent);
            }
        }

        if sys.b_hi.iter().all(|b| b.is_some()) {
            let b_hi: Vec<S> = sys.b_hi.iter().map(|b| b.unwrap()).collect();
            if let Some(g) = &green {
                if let Ok(cand) = solve(&sys, &b_hi) {
                    if cand.iter().all(|&v| v >= S::zero()) {
                        let res_inf = max_residual(&sys, &cand, &b_hi);
                        for &factor in &[S::lit(2.0), S::lit(16.0), S::lit(1024.0), S::lit(1e6)] {
                            let bump = res_inf * factor + S::epsilon() * factor;
                            let u: Vec<S> =
                                cand.iter().zip(g).map(|(&v, &gr)| v + bump * gr).collect();
                            if is_supersolution(&sys, &u, &b_hi) {
                                hi_hat = u;
                                break;
                            }
                        }
                    }
                }
            }
            if hi_hat.iter().any(|v| !v.is_finite()) {
                // Last resort: the reference weight itself (u_hat = 1),
                // valid when the drift inequality holds at this r.
                let ones = vec![S::one(); m];
                if is_supersolution(&sys, &ones, &b_hi) {
                    hi_hat = ones;
                }
            }
        }
    }

    let mut lo = vec![S::one(); n];
    let mut hi = vec![S::one(); n];
    for (i, &x) in sys.cc.iter().enumerate() {
        let wx = w.values()[x];
        lo[x] = sum_lower(lo_hat[i] * wx, 2);
        hi[x] = if hi_hat[i].is_finite() {
            sum_upper(hi_hat[i] * wx, 2)
        } else {
            S::infinity()
        };
    }
    Ok(HittingBrackets { lo, hi })
}

fn max_residual<S: Scalar>(sys: &HitSystem<S>, u: &[S], b: &[S]) -> S {
    let f = eval_op(sys, u, b);
    f.iter()
        .zip(u)
        .map(|(&fi, &ui)| (fi - ui).abs())
        .fold(S::zero(), S::max)
}

/// First-return brackets `E_x[r^tau] = r sum_y P(x, y) E_y[r^sigma]`.
pub fn return_gf<S: Scalar>(
    p: &Kernel<S>,
    r: S,
    brackets: &HittingBrackets<S>,
    w_ref: Option<&WeightFn<S>>,
) -> Result<(Vec<S>, Vec<S>)> {
    let n = p.space().window_len();
    let mut lo = vec![S::zero(); n];
    let mut hi = vec![S::zero(); n];
    for x in 0..n {
        let row = p.row(x);
        let mut acc_lo = S::zero();
        let mut acc_hi = S::zero();
        let mut terms = 0usize;
        for &(y, q) in row.entries() {
            if p.space().in_window(y) {
                acc_lo += q * brackets.lo[y];
                acc_hi += q * brackets.hi[y];
            } else {
                // E_y[r^sigma] >= 1 is not valid beyond the window for
                // the killed lower system; use 0 there, and the weight
                // above.
                match w_ref {
                    Some(w) => acc_hi += q * w.at(y)?,
                    None => acc_hi = S::infinity(),
                }
            }
            terms += 1;
        }
        if row.tail_bound() > S::zero() {
            acc_hi = S::infinity();
        }
        lo[x] = sum_lower(r * acc_lo, terms + 1);
        hi[x] = if acc_hi.is_finite() {
            sum_upper(r * acc_hi, terms + 1)
        } else {
            S::infinity()
        };
    }
    Ok((lo, hi))
}
