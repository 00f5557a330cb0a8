//! Stationary distributions, period detection, and verification of the
//! geometric-ergodicity envelope against oracle spectra.

use crate::eigen::{eigen_oracle, peripheral_count, subdominant_modulus};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measure::{AtomicMeasure, WindowFn};
use crate::scalar::Scalar;
use crate::weight::WeightFn;

#[derive(Clone, Debug)]
pub struct Stationary<S: Scalar> {
    pub pi: AtomicMeasure<S>,
    /// `None` when the space is too large for the dense oracle.
    pub unique: Option<bool>,
    pub residual: S,
}

/// Invariant probability of a finite kernel: dense solve of
/// `pi (P - I) = 0` with a normalization row, residual-checked; the
/// uniqueness flag counts oracle eigenvalues at the spectral radius 1.
/// Substochastic truncations are accepted as long as the residual passes,
/// which covers truncated walks whose escape mass is negligible.
pub fn stationary<S: Scalar>(p: &Kernel<S>) -> Result<Stationary<S>> {
    if !p.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    let n = p.space().window_len();
    // Solve x (I - P) = 0 i.e. (I - P)^T x = 0 with sum(x) = 1.
    let mut a = vec![S::zero(); n * n];
    for x in 0..n {
        a[x * n + x] += S::one();
        for &(y, q) in p.row(x).entries() {
            if y < n {
                a[y * n + x] -= q;
            }
        }
    }
    // Replace the last equation by the normalization.
    for j in 0..n {
        a[(n - 1) * n + j] = S::one();
    }
    let mut rhs = vec![S::zero(); n];
    rhs[n - 1] = S::one();
    let mut pi_vec = match lu_solve(&mut a, &mut rhs, n) {
        Some(v) => v,
        // Reducible chains make the replaced system singular; fall back
        // to the lazy-chain iteration, which converges to an invariant
        // measure of P from the uniform start.
        None => lazy_iteration(p)?,
    };
    // Clamp solver noise and renormalize.
    let mut ok = true;
    for v in pi_vec.iter_mut() {
        if *v < S::zero() {
            if *v < -S::lit(1e-9) {
                ok = false;
            }
            *v = S::zero();
        }
    }
    let total: S = pi_vec.iter().copied().sum();
    if !ok || !(total > S::zero()) {
        return Err(Error::NoConvergence(1.0));
    }
    for v in pi_vec.iter_mut() {
        *v /= total;
    }
    let pi = AtomicMeasure::new(
        p.space(),
        pi_vec
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != S::zero())
            .map(|(y, &v)| (y, v))
            .collect(),
        S::zero(),
    )?;
    // Residual ||pi P - pi||_1.
    let pi_p = p.adjoint_apply(&pi)?;
    let diff = pi_p.sub(&pi)?;
    let residual = diff.total_variation();
    if residual > S::lit(1e-10) {
        return Err(Error::NoConvergence(residual.to_f64()));
    }
    let unique = match eigen_oracle(p, None) {
        Ok(spec) => {
            let one = num_complex::Complex::new(S::one(), S::zero());
            let ones = spec
                .iter()
                .filter(|c| (**c - one).norm() < S::lit(1e-8))
                .count();
            Some(ones <= 1)
        }
        Err(_) => None,
    };
    Ok(Stationary {
        pi,
        unique,
        residual,
    })
}

fn lazy_iteration<S: Scalar>(p: &Kernel<S>) -> Result<Vec<S>> {
    let n = p.space().window_len();
    let mut mu = vec![S::one() / S::lit(n as f64); n];
    let half = S::lit(0.5);
    for _ in 0..200_000 {
        let mut next = vec![S::zero(); n];
        for x in 0..n {
            for &(y, q) in p.row(x).entries() {
                if y < n {
                    next[y] += mu[x] * q;
                }
            }
        }
        let mut delta = S::zero();
        for x in 0..n {
            let blended = half * (next[x] + mu[x]);
            delta += (blended - mu[x]).abs();
            mu[x] = blended;
        }
        if delta < S::lit(1e-14) {
            return Ok(mu);
        }
    }
    Err(Error::NoConvergence(1.0))
}

fn lu_solve<S: Scalar>(a: &mut [S], rhs: &mut [S], n: usize) -> Option<Vec<S>> {
    for col in 0..n {
        let mut piv_row = col;
        let mut piv_val = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > piv_val {
                piv_val = v;
                piv_row = r;
            }
        }
        if piv_val == S::zero() {
            return None;
        }
        if piv_row != col {
            for j in 0..n {
                a.swap(col * n + j, piv_row * n + j);
            }
            rhs.swap(col, piv_row);
        }
        let piv = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / piv;
            if f == S::zero() {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j] * f;
                a[r * n + j] -= v;
            }
            let v = rhs[col] * f;
            rhs[r] -= v;
        }
    }
    let mut out = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * out[j];
        }
        out[i] = acc / a[i * n + i];
    }
    Some(out)
}

/// Number of peripheral eigenvalues (modulus within 1e-9 of the spectral
/// radius); the cyclic-class count for irreducible kernels.
pub fn period_detect<S: Scalar>(p: &Kernel<S>) -> Result<usize> {
    let spec = eigen_oracle(p, None)?;
    Ok(peripheral_count(&spec, S::lit(1e-9)))
}

/// Report of the geometric-ergodicity check.
#[derive(Clone, Debug)]
pub struct ErgodicReport<S: Scalar> {
    pub pi: AtomicMeasure<S>,
    pub d: usize,
    pub s_limit: Kernel<S>,
    /// Fitted envelope constant.
    pub big_d: S,
    pub kappa: S,
    /// Per-n rows: (n, sup residual, sup ratio to kappa^n w(x)).
    pub decay_table: Vec<(usize, S, S)>,
    /// Least-squares slope of log sup-residuals over the back half.
    pub measured_log_slope: Option<S>,
    pub cesaro_ok: bool,
    pub unique: Option<bool>,
}

#[derive(Clone, Copy, Debug)]
pub struct ErgodicOptions<S: Scalar> {
    pub kappa_margin: S,
    pub n_burn: usize,
}

impl<S: Scalar> Default for ErgodicOptions<S> {
    fn default() -> Self {
        ErgodicOptions {
            kappa_margin: S::lit(0.01),
            n_burn: 10,
        }
    }
}

/// Verify the decay envelope
/// `|P^n f(x) - (P^(n mod d) S f)(x)| <= D ||f||_w kappa^n w(x)` for a
/// suite of test functions. `S` is the limit of `P^(nd)` (computed by
/// power doubling from the oracle's period `d`), `kappa` the subdominant
/// modulus plus a margin, and `D` the max ratio over `n >= n_burn`,
/// floored at 1; the envelope is then asserted for every `n >= n_burn`
/// and the early rows are recorded in the table.
pub fn ergodic_decay_check<S: Scalar>(
    p: &Kernel<S>,
    w: &WeightFn<S>,
    f_suite: &[WindowFn<S>],
    n_max: usize,
    opts: &ErgodicOptions<S>,
) -> Result<ErgodicReport<S>> {
    if !p.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    if f_suite.is_empty() {
        return Err(Error::Invalid("empty test-function suite".into()));
    }
    let n = p.space().window_len();
    for f in f_suite {
        p.space().check_same(f.space())?;
        let norm_w = f
            .values()
            .iter()
            .zip(w.values())
            .map(|(v, &wx)| v.abs() / wx)
            .fold(S::zero(), S::max);
        if norm_w > S::one() + S::lit(1e-9) {
            return Err(Error::Invalid(
                "test functions must have ||f||_w <= 1".into(),
            ));
        }
    }

    let spec = eigen_oracle(p, Some(w))?;
    let d = peripheral_count(&spec, S::lit(1e-9));
    let sub = subdominant_modulus(&spec, S::lit(1e-9)).unwrap_or(S::zero());
    let kappa = sub + opts.kappa_margin;
    if !(kappa < S::one()) {
        return Err(Error::Invalid(format!(
            "no usable spectral gap: subdominant modulus {} + margin reaches 1",
            sub.to_f64()
        )));
    }

    // S = lim P^(nd), by repeated squaring of P^d.
    let pd = p.power(d)?;
    let mut s_limit = pd.clone();
    for _ in 0..64 {
        let next = s_limit.compose(&s_limit)?;
        let mut delta = S::zero();
        for x in 0..n {
            let diff = next.row(x).sub(s_limit.row(x))?;
            delta = delta.max(diff.total_variation());
        }
        s_limit = next;
        if delta < S::lit(64.0) * S::eq_tol() {
            break;
        }
    }

    let stat = stationary(p)?;

    // Reference values (P^k S f)(x) for k < d, and the running powers.
    let mut refs: Vec<Vec<Vec<S>>> = Vec::with_capacity(f_suite.len());
    for f in f_suite {
        let sf = s_limit.apply(f)?.values;
        let mut per_k = Vec::with_capacity(d);
        let mut cur = sf;
        for _ in 0..d {
            per_k.push(cur.clone());
            let as_fn = WindowFn::new(p.space(), cur, Some(S::zero()))?;
            cur = p.apply(&as_fn)?.values;
        }
        refs.push(per_k);
    }

    let mut cur_fs: Vec<Vec<S>> = f_suite.iter().map(|f| f.values().to_vec()).collect();
    let mut cesaro_sums: Vec<Vec<S>> = vec![vec![S::zero(); n]; f_suite.len()];
    // Cesaro limit kernel P1 = (1/d) sum_{k<d} P^k S, applied to each f.
    let p1_f: Vec<Vec<S>> = refs
        .iter()
        .map(|per_k| {
            (0..n)
                .map(|x| {
                    let mut acc = S::zero();
                    for k in 0..d {
                        acc += per_k[k][x];
                    }
                    acc / S::lit(d as f64)
                })
                .collect()
        })
        .collect();

    let mut big_d = S::one();
    let mut table: Vec<(usize, S, S)> = Vec::with_capacity(n_max + 1);
    let mut ratios: Vec<Vec<(usize, usize, S)>> = Vec::new(); // (f, x, ratio) per n
    let mut kappa_n = S::one();
    for step in 0..=n_max {
        let mut sup_res = S::zero();
        let mut sup_ratio = S::zero();
        let mut detail = Vec::new();
        for (fi, cur) in cur_fs.iter().enumerate() {
            let reference = &refs[fi][step % d];
            for x in 0..n {
                let res = (cur[x] - reference[x]).abs();
                // Below the rounding floor the mathematical residual is
                // indistinguishable from zero; it must not feed the
                // envelope ratio once kappa^n undercuts float precision.
                let floor = S::lit(1e-13) * w.values()[x];
                let ratio = if res <= floor {
                    S::zero()
                } else {
                    res / (kappa_n * w.values()[x])
                };
                if res > sup_res {
                    sup_res = res;
                }
                if ratio > sup_ratio {
                    sup_ratio = ratio;
                }
                detail.push((fi, x, ratio));
            }
        }
        table.push((step, sup_res, sup_ratio));
        ratios.push(detail);
        if step >= opts.n_burn {
            big_d = big_d.max(sup_ratio);
        }
        // Advance the powers and the Cesaro sums.
        for (fi, cur) in cur_fs.iter_mut().enumerate() {
            for x in 0..n {
                cesaro_sums[fi][x] += cur[x];
            }
            let as_fn = WindowFn::new(p.space(), cur.clone(), Some(S::zero()))?;
            *cur = p.apply(&as_fn)?.values;
        }
        kappa_n *= kappa;
    }

    // Envelope assertion for n >= n_burn.
    for (step, detail) in ratios.iter().enumerate() {
        if step < opts.n_burn {
            continue;
        }
        for &(fi, x, ratio) in detail {
            if ratio > big_d * (S::one() + S::lit(1e-9)) {
                return Err(Error::EnvelopeViolated { n: step, f: fi, x });
            }
        }
    }

    // Cesaro check: ||(1/n) sum_{k<n} P^k f - P1 f||_w <= 3 D /(n (1-kappa)).
    // Verified at n = n_max using the accumulated sums.
    let mut cesaro_ok = true;
    let n_ces = S::lit((n_max + 1) as f64);
    for (fi, sums) in cesaro_sums.iter().enumerate() {
        for x in 0..n {
            let avg = sums[x] / n_ces;
            let lhs = (avg - p1_f[fi][x]).abs() / w.values()[x];
            let rhs = S::lit(3.0) * big_d / (n_ces * (S::one() - kappa));
            if lhs > rhs {
                cesaro_ok = false;
            }
        }
    }

    // Log-slope of the sup residuals over the back half, ignoring rows
    // that sank below the rounding-noise floor.
    let half = n_max / 2;
    let max_res = table.iter().map(|&(_, res, _)| res).fold(S::zero(), S::max);
    let floor = max_res * S::lit(1e-13);
    let collect = |from: usize| -> Vec<(S, S)> {
        table
            .iter()
            .filter(|&&(step, res, _)| step >= from && res > floor)
            .map(|&(step, res, _)| (S::lit(step as f64), res.ln()))
            .collect()
    };
    let mut pts = collect(half);
    if pts.len() < 2 {
        pts = collect(opts.n_burn);
    }
    let measured_log_slope = if pts.len() >= 2 {
        let m = S::lit(pts.len() as f64);
        let sx: S = pts.iter().map(|p| p.0).sum();
        let sy: S = pts.iter().map(|p| p.1).sum();
        let sxx: S = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: S = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = m * sxx - sx * sx;
        if denom != S::zero() {
            Some((m * sxy - sx * sy) / denom)
        } else {
            None
        }
    } else {
        None
    };

    Ok(ErgodicReport {
        pi: stat.pi,
        d,
        s_limit,
        big_d,
        kappa,
        decay_table: table,
        measured_log_slope,
        cesaro_ok,
        unique: stat.unique,
    })
}
