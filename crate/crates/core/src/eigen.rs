//! Dense eigenvalue oracle: full complex spectrum of a window matrix via
//! Hessenberg reduction and shifted QR. Independent brute-force route used
//! to cross-check every certified bound on finite spaces.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::scalar::{Entry, Scalar};
use crate::weight::WeightFn;

/// Hard cap on dense materialization.
pub const MAX_DENSE: usize = 600;

/// Full spectrum of the (optionally `w`-conjugated) dense window matrix,
/// sorted by decreasing modulus, ties by increasing argument. Finite
/// spaces only.
pub fn eigen_oracle<S: Scalar, W: Entry<S>>(
    q: &Kernel<S, W>,
    w: Option<&WeightFn<S>>,
) -> Result<Vec<Complex<S>>> {
    if !q.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    let n = q.space().window_len();
    if n > MAX_DENSE {
        return Err(Error::SizeLimit(n, MAX_DENSE));
    }
    let mut a: Vec<Vec<Complex<S>>> = q
        .to_dense()
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.as_complex()).collect())
        .collect();
    if let Some(w) = w {
        q.space().check_same(w.space())?;
        let wv = w.values();
        for x in 0..n {
            for y in 0..n {
                let f = wv[y] / wv[x];
                a[x][y] = Complex::new(a[x][y].re * f, a[x][y].im * f);
            }
        }
    }
    let mut eig = eigenvalues_dense(a)?;
    eig.sort_by(|u, v| {
        v.norm()
            .partial_cmp(&u.norm())
            .unwrap()
            .then(u.im.atan2(u.re).partial_cmp(&v.im.atan2(v.re)).unwrap())
    });
    Ok(eig)
}

/// Number of eigenvalues within `tol` of the largest modulus.
pub fn peripheral_count<S: Scalar>(spectrum: &[Complex<S>], tol: S) -> usize {
    if spectrum.is_empty() {
        return 0;
    }
    let r = spectrum[0].norm();
    spectrum.iter().filter(|c| c.norm() >= r - tol).count()
}

/// Largest modulus strictly below the peripheral shell (None when every
/// eigenvalue is peripheral).
pub fn subdominant_modulus<S: Scalar>(spectrum: &[Complex<S>], tol: S) -> Option<S> {
    if spectrum.is_empty() {
        return None;
    }
    let r = spectrum[0].norm();
    spectrum
        .iter()
        .map(|c| c.norm())
        .filter(|&m| m < r - tol)
        .fold(None, |acc: Option<S>, m| Some(acc.map_or(m, |a| a.max(m))))
}

/// Eigenvalues of a dense complex matrix (consumed).
pub fn eigenvalues_dense<S: Scalar>(mut a: Vec<Vec<Complex<S>>>) -> Result<Vec<Complex<S>>> {
    let n = a.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    for row in &a {
        if row.len() != n {
            return Err(Error::Invalid("matrix is not square".into()));
        }
    }
    if n == 1 {
        return Ok(vec![a[0][0]]);
    }
    hessenberg(&mut a);
    qr_eigenvalues(a)
}

fn czero<S: Scalar>() -> Complex<S> {
    Complex::new(S::zero(), S::zero())
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg<S: Scalar>(a: &mut [Vec<Complex<S>>]) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        // Build the reflector for column k, rows k+1..n.
        let mut norm2 = S::zero();
        for i in k + 1..n {
            norm2 += a[i][k].norm_sqr();
        }
        let norm = norm2.sqrt();
        if norm <= S::min_positive_value() {
            continue;
        }
        let pivot = a[k + 1][k];
        let alpha = if pivot.norm() > S::zero() {
            -(pivot / Complex::from_real(pivot.norm())) * Complex::from_real(norm)
        } else {
            Complex::new(-norm, S::zero())
        };
        let mut v: Vec<Complex<S>> = (k + 1..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: S = v.iter().map(|c| c.norm_sqr()).fold(S::zero(), |s, t| s + t);
        if vnorm2 <= S::min_positive_value() {
            continue;
        }
        let scale = S::lit(2.0) / vnorm2;
        // A <- (I - s v v^H) A
        for col in k..n {
            let mut dot = czero();
            for (off, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[k + 1 + off][col];
            }
            let dot = dot.scale(scale);
            for (off, vi) in v.iter().enumerate() {
                let t = *vi * dot;
                a[k + 1 + off][col] -= t;
            }
        }
        // A <- A (I - s v v^H)
        for row in 0..n {
            let mut dot = czero();
            for (off, vi) in v.iter().enumerate() {
                dot += a[row][k + 1 + off] * *vi;
            }
            let dot = dot.scale(scale);
            for (off, vi) in v.iter().enumerate() {
                let t = dot * vi.conj();
                a[row][k + 1 + off] -= t;
            }
        }
        for i in k + 2..n {
            a[i][k] = czero();
        }
        a[k + 1][k] = alpha;
    }
}

/// Eigenvalues of the trailing 2x2 of rows/cols (i, j).
fn two_by_two<S: Scalar>(
    a: Complex<S>,
    b: Complex<S>,
    c: Complex<S>,
    d: Complex<S>,
) -> (Complex<S>, Complex<S>) {
    let tr = a + d;
    let det = a * d - b * c;
    let half = Complex::from_real(S::lit(0.5));
    let disc = (tr * tr - det.scale(S::lit(4.0))).sqrt();
    let l1 = (tr + disc) * half;
    let l2 = (tr - disc) * half;
    (l1, l2)
}

/// Shifted explicit QR on an upper Hessenberg matrix, eigenvalues only.
fn qr_eigenvalues<S: Scalar>(mut h: Vec<Vec<Complex<S>>>) -> Result<Vec<Complex<S>>> {
    let n = h.len();
    let mut eigs: Vec<Complex<S>> = Vec::with_capacity(n);
    let eps = S::epsilon();
    let mut hnorm = S::zero();
    for row in &h {
        for c in row {
            hnorm += c.norm();
        }
    }
    let floor = (hnorm * eps * eps).max(S::min_positive_value());

    let mut hi = n - 1;
    let max_total = 60 * n + 200;
    let mut total_iter = 0usize;
    let mut stagnation = 0usize;
    loop {
        // Find the active block lo..=hi by scanning for a negligible
        // subdiagonal entry.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo][lo - 1].norm();
            let tol = (eps * (h[lo - 1][lo - 1].norm() + h[lo][lo].norm())).max(floor);
            if sub <= tol {
                h[lo][lo - 1] = czero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eigs.push(h[hi][hi]);
            if hi == 0 {
                return Ok(eigs);
            }
            hi -= 1;
            stagnation = 0;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = two_by_two(h[lo][lo], h[lo][hi], h[hi][lo], h[hi][hi]);
            eigs.push(l1);
            eigs.push(l2);
            if lo == 0 {
                return Ok(eigs);
            }
            hi = lo - 1;
            stagnation = 0;
            continue;
        }
        total_iter += 1;
        if total_iter > max_total {
            return Err(Error::Invalid(
                "QR iteration failed to converge within the iteration budget".into(),
            ));
        }
        let sigma = if stagnation > 0 && stagnation % 12 == 0 {
            // Exceptional shift to break symmetric cycling.
            h[hi][hi] + Complex::new(S::lit(0.75) * h[hi][hi - 1].norm(), S::zero())
        } else {
            let (l1, l2) = two_by_two(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi]);
            let d = h[hi][hi];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        stagnation += 1;
        qr_sweep(&mut h, lo, hi, sigma);
    }
}

/// One explicit shifted QR sweep on the active window `lo..=hi`.
fn qr_sweep<S: Scalar>(h: &mut [Vec<Complex<S>>], lo: usize, hi: usize, sigma: Complex<S>) {
    let n = h.len();
    for i in lo..=hi {
        h[i][i] -= sigma;
    }
    let mut rot: Vec<(S, Complex<S>)> = Vec::with_capacity(hi - lo);
    // Left Givens pass: zero the subdiagonal of H - sigma I.
    for k in lo..hi {
        let a = h[k][k];
        let b = h[k + 1][k];
        let (c, s) = givens(a, b);
        rot.push((c, s));
        for col in k..n.min(hi + 1) {
            let t1 = h[k][col];
            let t2 = h[k + 1][col];
            h[k][col] = t1.scale(c) + s * t2;
            h[k + 1][col] = -s.conj() * t1 + t2.scale(c);
        }
    }
    // Right pass: multiply by the adjoint rotations, restoring the
    // Hessenberg form.
    for (idx, &(c, s)) in rot.iter().enumerate() {
        let k = lo + idx;
        let row_end = (k + 1).min(hi);
        for row in lo..=row_end {
            let t1 = h[row][k];
            let t2 = h[row][k + 1];
            h[row][k] = t1.scale(c) + t2 * s.conj();
            h[row][k + 1] = -t1 * s + t2.scale(c);
        }
    }
    for i in lo..=hi {
        h[i][i] += sigma;
    }
}

/// Complex Givens rotation: returns `(c, s)` with `c` real such that
/// `[[c, s], [-conj(s), c]] [a; b] = [r; 0]`.
fn givens<S: Scalar>(a: Complex<S>, b: Complex<S>) -> (S, Complex<S>) {
    let an = a.norm();
    let bn = b.norm();
    if bn == S::zero() {
        return (S::one(), czero());
    }
    if an == S::zero() {
        return (S::zero(), b.conj() / Complex::from_real(bn));
    }
    let rho = (an * an + bn * bn).sqrt();
    let c = an / rho;
    let s = (a / Complex::from_real(an)) * b.conj() / Complex::from_real(rho);
    (c, s)
}
