//! Built-in example kernels: the reflected walk with its canonical
//! certificates, and seeded random chains.

use doeblin::drift::{DriftCertificate, MinorizationCertificate};
use doeblin::space::StateSet;
use doeblin::{Kernel64, Measure64, StateSpace, WeightFn};

/// Reflected walk with its canonical drift/minorization data: `w = z^x`,
/// `z = sqrt(q/p)`, `r1 = 1/(2 sqrt(pq))`, `eta = r1 (q + p z)`,
/// `C = {0}`, `b = 1`, `nu = P(0, .)`.
pub struct WalkModel {
    pub p: f64,
    pub x_max: usize,
    pub kernel: Kernel64,
    pub w: WeightFn<f64>,
    pub drift: DriftCertificate<f64>,
    pub minor: MinorizationCertificate<f64>,
    /// Closed-form target for the essential-radius bound: `2 sqrt(pq)`.
    pub rate: f64,
}

/// Build the reflected walk `P(0,0) = q`, `P(0,1) = p`,
/// `P(x, x-1) = q`, `P(x, x+1) = p`, for `0 < p < 1/2`.
pub fn build_reflected_walk(p: f64, x_max: usize) -> Result<WalkModel, doeblin::Error> {
    if !(p > 0.0 && p < 0.5) {
        return Err(doeblin::Error::Invalid(
            "the reflected walk needs 0 < p < 1/2".into(),
        ));
    }
    let q = 1.0 - p;
    let sp = StateSpace::windowed(x_max);
    let mut rows = vec![Measure64::new(sp, vec![(0, q), (1, p)], 0.0)?];
    for x in 1..=x_max {
        rows.push(Measure64::new(sp, vec![(x - 1, q), (x + 1, p)], 0.0)?);
    }
    let kernel = Kernel64::positive(sp, rows, true)?;
    let z = (q / p).sqrt();
    let w = WeightFn::geometric(sp, z)?;
    let rate = 2.0 * (p * q).sqrt();
    let r1 = 1.0 / rate;
    let eta = r1 * (q + p * z);
    let c = StateSet::new(sp, vec![0])?;
    let drift = DriftCertificate::new(c.clone(), w.clone(), r1, eta)?;
    let nu = Measure64::new(sp, vec![(0, q), (1, p)], 0.0)?;
    let minor = MinorizationCertificate::with_unit_density(c, 1.0, nu)?;
    Ok(WalkModel {
        p,
        x_max,
        kernel,
        w,
        drift,
        minor,
        rate,
    })
}

/// SplitMix64: deterministic across platforms, used for all seeded
/// examples.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn uniform01(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Dense seeded Markov chain with strictly positive entries (aperiodic
/// and irreducible).
pub fn seeded_chain(n: usize, seed: u64) -> Kernel64 {
    let sp = StateSpace::finite(n);
    let mut state = seed;
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| uniform01(&mut state) + 0.05).collect();
            let total: f64 = raw.iter().sum();
            Measure64::new(
                sp,
                raw.iter()
                    .enumerate()
                    .map(|(y, &v)| (y, v / total))
                    .collect(),
                0.0,
            )
            .expect("valid row")
        })
        .collect();
    Kernel64::positive(sp, rows, true).expect("valid chain")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_targets() {
        let m = build_reflected_walk(0.3, 50).unwrap();
        assert!((m.drift.r1() - 1.091089451179962).abs() < 1e-12);
        assert!((m.rate - 0.916515138991168).abs() < 1e-12);
        let m2 = build_reflected_walk(0.1, 10).unwrap();
        assert!((m2.rate - 0.6).abs() < 1e-12);
        assert!(build_reflected_walk(0.5, 10).is_err());
    }

    #[test]
    fn rate_degenerates_toward_half() {
        let m = build_reflected_walk(0.499, 10).unwrap();
        assert!(m.rate > 0.999);
        assert!(m.drift.r1() < 1.001);
    }

    #[test]
    fn seeded_chain_deterministic() {
        let a = seeded_chain(6, 42);
        let b = seeded_chain(6, 42);
        for x in 0..6 {
            assert_eq!(a.row(x).entries(), b.row(x).entries());
        }
    }
}
