//! The dyadic transfer operator `Pf(x) = u(x/2) f(x/2) + u((x+1)/2) f((x+1)/2)`
//! on [0, 1], evaluated as a function-space operator (never discretized:
//! the dyadic orbit escapes any finite grid). For `u = 1/2` the lacunary
//! cosine series `f_lambda(x) = sum_{n>=1} lambda^(n-1) cos(2^n pi x)` is
//! an eigenfunction for every `|lambda| < 1`; the residual of its N-term
//! truncation is certified against the analytic tail bound
//! `2 |lambda|^N / (1 - |lambda|)`.
//!
//! All cosines are taken at rational points j/den: the angle `2^n pi j/den`
//! reduces exactly to `pi ((2^n j) mod 2 den)/den` by modular
//! exponentiation, so no precision is lost to the huge `2^n` factors.

use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConzeError {
    #[error("u is not a kernel: u(x/2) + u((x+1)/2) = {found} != 1 at x = {x}")]
    NotAKernel { x: f64, found: f64 },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

/// The weight function `u` of the operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum USpec {
    /// `u = 1/2` (the eigenfunction case).
    Half,
    /// `u(x) = 1/2 + amp sin(2 pi x)`: Lipschitz and non-constant, still
    /// a partition of unity.
    Sine { amp: f64 },
    /// `u(x) = 1/2 + amp x`: violates the partition identity; used as the
    /// rejected-input control.
    Affine { amp: f64 },
}

impl USpec {
    fn eval(&self, r: Rational) -> f64 {
        let x = r.to_f64();
        match *self {
            USpec::Half => 0.5,
            USpec::Sine { amp } => 0.5 + amp * (2.0 * std::f64::consts::PI * x).sin(),
            USpec::Affine { amp } => 0.5 + amp * x,
        }
    }
}

/// A rational point `num/den` in [0, 1].
#[derive(Clone, Copy, Debug)]
struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
    fn half(self) -> Rational {
        Rational {
            num: self.num,
            den: 2 * self.den,
        }
    }
    fn half_shift(self) -> Rational {
        Rational {
            num: self.num + self.den,
            den: 2 * self.den,
        }
    }
}

fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc: u128 = 1;
    let m = modulus as u128;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// `cos(2^n pi num/den)` with exact argument reduction.
fn cos_dyadic(n: u64, r: Rational) -> f64 {
    let two_den = 2 * r.den;
    let factor = pow_mod(2, n, two_den);
    let m = (factor as u128 * r.num as u128 % two_den as u128) as u64;
    (std::f64::consts::PI * m as f64 / r.den as f64).cos()
}

/// N-term truncation of the eigenfunction series at a rational point.
fn f_lambda(lambda: Complex<f64>, terms: usize, r: Rational) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    let mut pow = Complex::new(1.0, 0.0);
    for n in 1..=terms {
        acc += pow * cos_dyadic(n as u64, r);
        pow *= lambda;
    }
    acc
}

#[derive(Clone, Debug)]
pub struct ConzeResidual {
    pub max_residual: f64,
    /// Analytic truncation tail `2 |lambda|^N / (1 - |lambda|)`.
    pub tail_bound: f64,
    /// Whether the eigenrelation holds within tail + accumulation slack.
    pub within_tail: bool,
    pub grid: usize,
    pub terms: usize,
}

/// Max over the grid of `|P f_lambda^(N) - lambda f_lambda^(N)|`,
/// reported with the analytic tail bound. Grid points are `i/(G-1)`.
pub fn conze_raugi_residual(
    u: USpec,
    lambda: Complex<f64>,
    terms: usize,
    grid: usize,
) -> Result<ConzeResidual, ConzeError> {
    if terms < 1 || grid < 2 {
        return Err(ConzeError::Invalid("need terms >= 1 and grid >= 2".into()));
    }
    if lambda.norm() >= 1.0 {
        return Err(ConzeError::Invalid("need |lambda| < 1".into()));
    }
    let den = (grid - 1) as u64;
    // Partition-of-unity check on the grid.
    for i in 0..grid {
        let x = Rational { num: i as u64, den };
        let total = u.eval(x.half()) + u.eval(x.half_shift());
        if (total - 1.0).abs() > 1e-12 {
            return Err(ConzeError::NotAKernel {
                x: x.to_f64(),
                found: total,
            });
        }
    }
    let mut max_residual = 0.0f64;
    for i in 0..grid {
        let x = Rational { num: i as u64, den };
        let left = x.half();
        let right = x.half_shift();
        let pf = f_lambda(lambda, terms, left) * u.eval(left)
            + f_lambda(lambda, terms, right) * u.eval(right);
        let res = (pf - lambda * f_lambda(lambda, terms, x)).norm();
        max_residual = max_residual.max(res);
    }
    let tail_bound = 2.0 * lambda.norm().powi(terms as i32) / (1.0 - lambda.norm());
    Ok(ConzeResidual {
        max_residual,
        tail_bound,
        within_tail: max_residual <= tail_bound + 1e-12,
        grid,
        terms,
    })
}
