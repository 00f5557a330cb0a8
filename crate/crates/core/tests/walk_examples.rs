//! The reflected random walk exercised end to end: operator algebra,
//! weighted norms, conjugation, residual bounds, and the drift pipeline.

use doeblin::decompose::{delta_nu, DensityKernel};
use doeblin::drift::{
    hitting_gf, DriftCertificate, MinorizationCertificate, RbOptions, SplitEngine,
};
use doeblin::essrad::{re_upper_weighted, WeightedStrategy};
use doeblin::space::StateSet;
use doeblin::{Kernel64, Measure64, StateSpace, WeightFn, WindowFn64};

const P: f64 = 0.3;
const Q: f64 = 0.7;

fn walk(x_max: usize) -> Kernel64 {
    let sp = StateSpace::windowed(x_max);
    let mut rows = vec![Measure64::new(sp, vec![(0, Q), (1, P)], 0.0).unwrap()];
    for x in 1..=x_max {
        rows.push(Measure64::new(sp, vec![(x - 1, Q), (x + 1, P)], 0.0).unwrap());
    }
    Kernel64::positive(sp, rows, true).unwrap()
}

fn z() -> f64 {
    (Q / P).sqrt()
}

#[test]
fn apply_indicator_of_origin() {
    // P f with f = 1_{0}: (0.7, 0.7, 0, 0, ...).
    let p = walk(30);
    let f = WindowFn64::indicator(p.space(), &[0]);
    let out = p.apply(&f).unwrap();
    assert_eq!(out.values[0], Q);
    assert_eq!(out.values[1], Q);
    for x in 2..=30 {
        assert_eq!(out.values[x], 0.0);
    }
}

#[test]
fn two_step_return_probability() {
    // P^2(0, {0}) = 0.7*0.7 + 0.3*0.7 = 0.70.
    let p = walk(10);
    let p2 = p.power(2).unwrap();
    assert!((p2.row(0).weight_at(0) - 0.70).abs() < 1e-15);
}

#[test]
fn weighted_norm_attained_at_origin() {
    let p = walk(40);
    let w = WeightFn::geometric(p.space(), z()).unwrap();
    let nrm = p.weighted_norm(&w).unwrap();
    let expected = Q + P * z();
    assert!(nrm.contains(expected), "norm {:?}", nrm);
    assert!((nrm.midpoint() - 1.158257569495584).abs() < 1e-9);
    // Off the boundary the ratio is exactly 2 sqrt(pq).
    let sums = p.apply_weight_abs(&w).unwrap();
    let interior = sums[5].midpoint() / w.values()[5];
    assert!((interior - 0.916515138991168).abs() < 1e-12);
}

#[test]
fn conjugated_interior_row() {
    // Off-boundary conjugated row becomes (q/z, p z) = (0.458258, 0.458258).
    let p = walk(20);
    let w = WeightFn::geometric(p.space(), z()).unwrap();
    let pc = p.conjugate(&w).unwrap();
    let row = pc.row(5);
    let sqrt_pq = (P * Q).sqrt();
    assert!((row.weight_at(4) - sqrt_pq).abs() < 1e-12);
    assert!((row.weight_at(6) - sqrt_pq).abs() < 1e-12);
    assert!((row.weight_at(4) - 0.458257569495584).abs() < 1e-9);
}

#[test]
fn conjugation_involution() {
    let p = walk(15);
    let w = WeightFn::geometric(p.space(), z()).unwrap();
    let back = p.conjugate(&w).unwrap().conjugate_inv(&w).unwrap();
    for x in 0..=15 {
        for &(y, v) in p.row(x).entries() {
            assert!((back.row(x).weight_at(y) - v).abs() < 1e-14);
        }
    }
}

#[test]
fn residual_power_norms_decrease_to_interior_rate() {
    // S = walk with row 0 zeroed, w-conjugated: ||S^n||^{1/n} stays at
    // 2 sqrt(pq) once the weight is exactly tuned.
    let x_max = 120;
    let p = walk(x_max);
    let sp = p.space();
    let w = WeightFn::geometric(sp, z()).unwrap();
    let mut rows: Vec<Measure64> = p.rows().to_vec();
    rows[0] = Measure64::zero(sp);
    let s = Kernel64::positive(sp, rows, false).unwrap();
    let s_conj = s.conjugate(&w).unwrap();
    let one = WeightFn::one(sp);
    let target = 2.0 * (P * Q).sqrt();
    let mut prev = f64::INFINITY;
    for n in [8usize, 16, 32] {
        let bound = s_conj.spectral_radius_upper(&one, n).unwrap();
        let hi = bound.upper.hi;
        assert!(hi <= prev * (1.0 + 1e-12), "not nonincreasing at n={n}");
        assert!(hi >= target - 1e-12);
        assert!(hi <= target + 1e-3, "n={n}: {hi}");
        prev = hi;
    }
    assert!((prev - target).abs() < 1e-6);
}

#[test]
fn weighted_residual_bound_brackets_interior_rate() {
    // The spec's residual route: T completes row 0, S = P with row 0
    // zeroed; on B_w the bound lands in [0.9165, 0.93].
    let x_max = 120;
    let p = walk(x_max);
    let sp = p.space();
    let nu = Measure64::new(sp, vec![(0, Q), (1, P)], 0.0).unwrap();
    // T: row 0 gets the full row (alpha = density of P(0,.)), others zero.
    let mut alpha = vec![vec![0.0; nu.entries().len()]; sp.window_len()];
    alpha[0] = vec![1.0, 1.0];
    let t = DensityKernel::new(nu, (0..sp.window_len()).collect(), alpha, None).unwrap();
    let w = WeightFn::geometric(sp, z()).unwrap();
    let bound = re_upper_weighted(
        &p,
        &w,
        WeightedStrategy::Residual {
            ell: 1,
            t: &t,
            n_power: 32,
        },
    )
    .unwrap();
    assert!(bound.value.hi >= 0.9165);
    assert!(bound.value.hi <= 0.93, "bound {:?}", bound.value);
    assert_eq!(bound.quasi_compact, Some(true));
}

#[test]
fn doeblin_tail_bound_on_conjugated_walk() {
    // delta_nu route on the conjugated truncation with a geometric nu:
    // certified value must stay at or below the interior rate + slack.
    for x_max in [100usize, 200, 300] {
        let p = walk(x_max);
        let sp = p.space();
        let w = WeightFn::geometric(sp, z()).unwrap();
        let pc = p.conjugate(&w).unwrap();
        // Geometric reference probability on the window.
        let ratio: f64 = 0.5;
        let raw: Vec<(usize, f64)> = (0..sp.window_len())
            .map(|y| (y, ratio.powi(y as i32 + 1)))
            .collect();
        let total: f64 = raw.iter().map(|e| e.1).sum();
        let nu = Measure64::new(
            sp,
            raw.into_iter().map(|(y, v)| (y, v / total)).collect(),
            0.0,
        )
        .unwrap();
        let family: Vec<Measure64> = pc.rows().to_vec();
        let delta = delta_nu(&family, &nu).unwrap();
        let bound = delta.hi;
        assert!(bound <= 0.916515138991168 + 0.02, "window {x_max}: {bound}");
    }
}

#[test]
fn walk_certificate_pipeline_closed_form() {
    // b = 1 certificate: r_b = r1 and the final bound is 2 sqrt(pq).
    let x_max = 300;
    let p = walk(x_max);
    let sp = p.space();
    let w = WeightFn::geometric(sp, z()).unwrap();
    let c = StateSet::new(sp, vec![0]).unwrap();
    let r1 = 1.0 / (2.0 * (P * Q).sqrt());
    let eta = r1 * (Q + P * z());
    let drift = DriftCertificate::new(c.clone(), w, r1, eta).unwrap();
    let nu = Measure64::new(sp, vec![(0, Q), (1, P)], 0.0).unwrap();
    let minor = MinorizationCertificate::with_unit_density(c, 1.0, nu).unwrap();
    let engine = SplitEngine::new(p, drift, minor).unwrap();
    let profile = engine.compute_rb(&RbOptions::default()).unwrap();
    assert!((profile.r_b.lo - r1).abs() < 1e-9);
    let bound = profile.ess_bound();
    assert!((bound.hi - 0.916515138991168).abs() < 1e-9);
    // Multiplier variant rides along as |chi| / r_b.
    assert!((profile.chi_bound(0.5) - 0.5 * 0.916515138991168).abs() < 1e-9);
}

#[test]
fn walk_hitting_brackets_stay_below_weight() {
    let p = walk(80);
    let sp = p.space();
    let w = WeightFn::geometric(sp, z()).unwrap();
    let c = StateSet::new(sp, vec![0]).unwrap();
    let r1 = 1.0 / (2.0 * (P * Q).sqrt());
    let br = hitting_gf(&p, &c, r1, Some(&w)).unwrap();
    for x in 0..=80usize {
        assert!(br.hi[x] <= w.values()[x] * (1.0 + 1e-11));
        assert!(br.lo[x] <= br.hi[x]);
    }
}

#[test]
fn walk_minorization_ui_tail_weighted() {
    // alpha = 1 against nu = P(0,.), weighted: alpha^(w)(0, y) = w(y),
    // so the tail vanishes beyond m = z.
    let p = walk(30);
    let sp = p.space();
    let w = WeightFn::geometric(sp, z()).unwrap();
    let nu = Measure64::new(sp, vec![(0, Q), (1, P)], 0.0).unwrap();
    let dk = DensityKernel::new(nu, vec![0], vec![vec![1.0, 1.0]], Some(w)).unwrap();
    let tail_above = doeblin::decompose::ui_tail(&dk, z() + 1e-9).unwrap();
    assert_eq!(tail_above, 0.0);
    // ui_tail(0) is the weighted row mass of T: (q + p z)/w(0).
    let tail_all = doeblin::decompose::ui_tail(&dk, 0.0).unwrap();
    assert!((tail_all - (Q + P * z())).abs() < 1e-12);
    let _ = p;
}

#[test]
fn truncated_walk_stationary_is_geometric() {
    // Detailed balance: pi(x) ~ (p/q)^x with ratio 3/7 for p = 0.3.
    let p = walk(120);
    let (truncated, _) = p.truncate_to_finite();
    let stat = doeblin::ergodic::stationary(&truncated).unwrap();
    let ratio_target = P / Q;
    // Near the head the ratio is sharp; deeper in the (3/7)^x tail the
    // absolute solver noise dominates, so check detailed balance in
    // absolute terms there.
    for x in 0..10usize {
        let ratio = stat.pi.weight_at(x + 1) / stat.pi.weight_at(x);
        assert!((ratio - ratio_target).abs() < 1e-9, "x = {x}: {ratio}");
    }
    let head = stat.pi.weight_at(0);
    for x in 0..100usize {
        let db = stat.pi.weight_at(x) * P - stat.pi.weight_at(x + 1) * Q;
        assert!(db.abs() < 1e-12 * head, "x = {x}: balance residual {db}");
    }
    assert!(stat.residual < 1e-10);
}

#[test]
fn subcritical_hitting_matches_phi_closed_form() {
    // E_x[r^sigma] = phi(r)^x with
    // phi(r) = (1 - sqrt(1 - 4 p q r^2)) / (2 p r) for r < r1; away from
    // the critical point the window truncation error is exponentially
    // small and the brackets are tight.
    let x_max = 100usize;
    let p = walk(x_max);
    let w = WeightFn::geometric(p.space(), z()).unwrap();
    let c = StateSet::new(p.space(), vec![0]).unwrap();
    let r = 1.05f64;
    let phi = (1.0 - (1.0 - 4.0 * P * Q * r * r).sqrt()) / (2.0 * P * r);
    let br = hitting_gf(&p, &c, r, Some(&w)).unwrap();
    for x in 1..=20usize {
        let exact = phi.powi(x as i32);
        assert!(br.lo[x] <= exact * (1.0 + 1e-12) && exact <= br.hi[x] * (1.0 + 1e-12));
        // Width in the weight-scaled units the solver works in.
        let scaled = (br.hi[x] - br.lo[x]) / w.values()[x];
        assert!(scaled < 1e-9, "x = {x}: scaled width {scaled}");
        assert!((br.lo[x] - exact).abs() <= 1e-9 * w.values()[x]);
    }
    // At the critical r1 the closed form degenerates to phi = z.
    let phi_crit = 1.0 / (2.0 * P * (1.0 / (2.0 * (P * Q).sqrt())));
    assert!((phi_crit - z()).abs() < 1e-12);
}

#[test]
fn unlocated_tail_mass_blocks_weighted_ops() {
    // A row with tail_bound > 0 on a windowed space: the weighted norm
    // upper endpoint is unbounded (the weight is unbounded out there),
    // and conjugation refuses outright.
    let sp = StateSpace::windowed(4);
    let mut rows: Vec<Measure64> = (0..5).map(|x| Measure64::dirac(sp, x)).collect();
    rows[2] = Measure64::new(sp, vec![(2, 0.9)], 0.1).unwrap();
    let q = Kernel64::positive(sp, rows, false).unwrap();
    let w = WeightFn::geometric(sp, 1.5).unwrap();
    let nrm = q.weighted_norm(&w).unwrap();
    assert!(nrm.hi.is_infinite());
    assert!(nrm.lo.is_finite());
    assert!(matches!(
        q.conjugate(&w),
        Err(doeblin::Error::IncompatibleTail)
    ));
}

#[test]
fn near_critical_walk_pipeline() {
    // p = 0.45: the rate 2 sqrt(pq) = 0.99499 sits close to 1, stressing
    // the certificates without degenerating them.
    let p = 0.45f64;
    let q = 1.0 - p;
    let x_max = 200usize;
    let sp = StateSpace::windowed(x_max);
    let mut rows = vec![Measure64::new(sp, vec![(0, q), (1, p)], 0.0).unwrap()];
    for x in 1..=x_max {
        rows.push(Measure64::new(sp, vec![(x - 1, q), (x + 1, p)], 0.0).unwrap());
    }
    let kernel = Kernel64::positive(sp, rows, true).unwrap();
    let z = (q / p).sqrt();
    let w = WeightFn::geometric(sp, z).unwrap();
    let rate = 2.0 * (p * q).sqrt();
    let r1 = 1.0 / rate;
    let c = StateSet::new(sp, vec![0]).unwrap();
    let drift = DriftCertificate::new(c.clone(), w, r1, r1 * (q + p * z)).unwrap();
    let nu = Measure64::new(sp, vec![(0, q), (1, p)], 0.0).unwrap();
    let minor = MinorizationCertificate::with_unit_density(c, 1.0, nu).unwrap();
    let engine = SplitEngine::new(kernel, drift, minor).unwrap();
    let profile = engine.compute_rb(&RbOptions::default()).unwrap();
    let bound = profile.ess_bound().hi;
    assert!((bound - rate).abs() < 1e-9, "bound {bound} vs {rate}");
    assert!(bound < 1.0);
}
