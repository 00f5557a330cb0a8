//! Lebesgue-Nikodym decomposition of measures and kernels, the Doeblin
//! split, uniform-integrability tail functionals, and the set functions
//! measuring non-uniform absolute continuity.
//!
//! Windowed semantics: the window is a truncation of a countable space,
//! so the tail functionals are evaluated at the largest density level
//! present rather than at an unreachable infinite cutoff, and mass beyond
//! the window counts as singular. On finite spaces the true limits are
//! computed (they are exact there).

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kernel::Kernel;
use crate::measure::AtomicMeasure;
use crate::scalar::{sum_lower, sum_upper, Scalar};
use crate::weight::WeightFn;

/// Result of decomposing `mu` against a probability `nu`:
/// `mu = density . nu + singular`, the singular part supported on
/// `{nu = 0}` (including everything beyond `nu`'s atoms and the tail).
#[derive(Clone, Debug)]
pub struct MeasureDecomposition<S: Scalar> {
    /// Density values aligned with `nu.entries()`.
    pub density: Vec<S>,
    pub singular: AtomicMeasure<S>,
}

pub fn lebesgue_decompose<S: Scalar>(
    mu: &AtomicMeasure<S>,
    nu: &AtomicMeasure<S>,
) -> Result<MeasureDecomposition<S>> {
    mu.space().check_same(nu.space())?;
    if !nu.is_probability() {
        return Err(Error::Invalid(
            "reference measure must be a probability".into(),
        ));
    }
    let mut density = vec![S::zero(); nu.entries().len()];
    let mut singular_entries = Vec::new();
    for &(y, m) in mu.entries() {
        match nu.entries().binary_search_by_key(&y, |&(s, _)| s) {
            Ok(k) if nu.entries()[k].1 > S::zero() => {
                density[k] = m / nu.entries()[k].1;
            }
            _ => singular_entries.push((y, m)),
        }
    }
    let singular = AtomicMeasure::new(mu.space(), singular_entries, mu.tail_bound())?;
    Ok(MeasureDecomposition { density, singular })
}

/// Absolutely continuous kernel `T_{nu,alpha}(x, {y}) = alpha(x, y) nu({y})`.
/// Rows are indexed by `row_states` (the full window for decompositions,
/// a small set for minorization certificates); densities are aligned with
/// `nu.entries()`. An optional weight selects the `alpha^(w)` variant in
/// the tail functional.
#[derive(Clone, Debug)]
pub struct DensityKernel<S: Scalar> {
    nu: AtomicMeasure<S>,
    row_states: Vec<usize>,
    alpha: Vec<Vec<S>>,
    weighted: Option<WeightFn<S>>,
}

impl<S: Scalar> DensityKernel<S> {
    pub fn new(
        nu: AtomicMeasure<S>,
        row_states: Vec<usize>,
        alpha: Vec<Vec<S>>,
        weighted: Option<WeightFn<S>>,
    ) -> Result<Self> {
        if !nu.is_probability() {
            return Err(Error::Invalid("nu must be a probability".into()));
        }
        if alpha.len() != row_states.len() {
            return Err(Error::Invalid("one density row per row state".into()));
        }
        for row in &alpha {
            if row.len() != nu.entries().len() {
                return Err(Error::Invalid(
                    "density rows must align with nu's support".into(),
                ));
            }
            if row.iter().any(|&a| a < S::zero() || !a.is_finite()) {
                return Err(Error::Invalid("densities must be finite and >= 0".into()));
            }
        }
        if let Some(w) = &weighted {
            nu.space().check_same(w.space())?;
        }
        Ok(DensityKernel {
            nu,
            row_states,
            alpha,
            weighted,
        })
    }

    pub fn nu(&self) -> &AtomicMeasure<S> {
        &self.nu
    }

    pub fn row_states(&self) -> &[usize] {
        &self.row_states
    }

    pub fn alpha(&self) -> &[Vec<S>] {
        &self.alpha
    }

    pub fn weighted(&self) -> Option<&WeightFn<S>> {
        self.weighted.as_ref()
    }

    pub fn with_weight(mut self, w: WeightFn<S>) -> Result<Self> {
        self.nu.space().check_same(w.space())?;
        self.weighted = Some(w);
        Ok(self)
    }

    pub fn alpha_sup(&self) -> S {
        self.alpha
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(S::zero(), S::max)
    }

    /// Row measure `T(x, .) = alpha(x, .) . nu`.
    pub fn row_measure(&self, row: usize) -> AtomicMeasure<S> {
        let entries = self
            .nu
            .entries()
            .iter()
            .zip(&self.alpha[row])
            .filter(|&(_, &a)| a > S::zero())
            .map(|(&(y, nv), &a)| (y, a * nv))
            .collect();
        AtomicMeasure::new(self.nu.space(), entries, S::zero()).expect("valid row measure")
    }

    /// Row mass `T(x, E)` with a certified bracket for float summation.
    pub fn row_mass(&self, row: usize) -> Interval<S> {
        let mut sum = S::zero();
        for (&(_, nv), &a) in self.nu.entries().iter().zip(&self.alpha[row]) {
            sum += a * nv;
        }
        let n = self.nu.entries().len();
        Interval::new(sum_lower(sum, n), sum_upper(sum, n))
    }

    /// Materialize `T_{nu,alpha}` over the full window (rows absent from
    /// `row_states` are zero).
    pub fn to_kernel(&self) -> Result<Kernel<S>> {
        let space = self.nu.space();
        let mut rows: Vec<AtomicMeasure<S>> = (0..space.window_len())
            .map(|_| AtomicMeasure::zero(space))
            .collect();
        for (i, &x) in self.row_states.iter().enumerate() {
            if !space.in_window(x) {
                return Err(Error::Invalid("density row outside the window".into()));
            }
            rows[x] = self.row_measure(i);
        }
        Kernel::new(space, rows, false)
    }

    /// Effective density at `(row, k)`: `alpha` or `alpha^(w)` when a
    /// weight is attached.
    fn effective_density(&self, row: usize, k: usize) -> Result<S> {
        let a = self.alpha[row][k];
        match &self.weighted {
            None => Ok(a),
            Some(w) => {
                let x = self.row_states[row];
                let y = self.nu.entries()[k].0;
                Ok(a * w.at(y)? / w.at(x)?)
            }
        }
    }
}

/// Uniform-integrability tail
/// `sup_x sum_{y: alpha(x,y) >= m} alpha(x,y) nu({y})`, using the
/// weighted densities when the kernel carries a weight. Nonincreasing in
/// `m`, and zero beyond the largest density present.
pub fn ui_tail<S: Scalar>(dk: &DensityKernel<S>, m: S) -> Result<S> {
    let mut sup = S::zero();
    for row in 0..dk.alpha.len() {
        let mut acc = S::zero();
        for (k, &(_, nv)) in dk.nu.entries().iter().enumerate() {
            let a = dk.effective_density(row, k)?;
            if a >= m {
                acc += a * nv;
            }
        }
        sup = sup.max(acc);
    }
    Ok(sup)
}

/// Row-wise Lebesgue decomposition of a kernel against `nu`: an
/// absolutely continuous part as a [`DensityKernel`] plus a singular
/// kernel, reconstructing the input exactly.
pub fn kernel_decompose<S: Scalar>(
    k: &Kernel<S>,
    nu: &AtomicMeasure<S>,
) -> Result<(DensityKernel<S>, Kernel<S>)> {
    k.space().check_same(nu.space())?;
    let n = k.space().window_len();
    let mut alpha = Vec::with_capacity(n);
    let mut singular_rows = Vec::with_capacity(n);
    for x in 0..n {
        let dec = lebesgue_decompose(k.row(x), nu)?;
        alpha.push(dec.density);
        singular_rows.push(dec.singular);
    }
    let dk = DensityKernel::new(nu.clone(), (0..n).collect(), alpha, None)?;
    let sing = Kernel::new(k.space(), singular_rows, false)?;
    Ok((dk, sing))
}

/// Doeblin certificate: the data of condition (D),
/// `nu(A) <= eta  =>  Q^ell(x, A) <= rho^ell` for all `x`.
#[derive(Clone, Debug)]
pub struct DoeblinCertificate<S: Scalar> {
    pub ell: usize,
    pub nu: AtomicMeasure<S>,
    pub eta: S,
    pub rho: S,
}

impl<S: Scalar> DoeblinCertificate<S> {
    pub fn new(ell: usize, nu: AtomicMeasure<S>, eta: S, rho: S) -> Result<Self> {
        if ell < 1 {
            return Err(Error::Invalid("ell must be >= 1".into()));
        }
        if !nu.is_probability() {
            return Err(Error::Invalid("nu must be a probability".into()));
        }
        if !(eta > S::zero()) || rho < S::zero() {
            return Err(Error::Invalid("need eta > 0 and rho >= 0".into()));
        }
        Ok(DoeblinCertificate { ell, nu, eta, rho })
    }

    pub fn threshold(&self) -> S {
        self.rho.powi(self.ell as i32)
    }
}

/// Outcome of the greedy condition-(D) scan: the worst small-set mass
/// bracketed between the greedy prefix value and its fractional-knapsack
/// relaxation.
#[derive(Clone, Debug)]
pub struct DoeblinScan<S: Scalar> {
    /// Bracket on `sup_x sup {Q^ell(x, A) : nu(A) <= eta}`.
    pub worst_mass: Interval<S>,
    pub worst_x: usize,
    /// Greedy witness set attaining `worst_mass.lo`.
    pub witness: Vec<usize>,
}

impl<S: Scalar> DoeblinScan<S> {
    fn witness_nu_mass(&self, nu: &AtomicMeasure<S>) -> S {
        self.witness.iter().map(|&y| nu.weight_at(y)).sum()
    }
}

/// Greedy scan of condition (D) on `qell` (already the `ell`-th power).
/// States sorted by decreasing density against `nu` are packed under the
/// `nu(A) <= eta` budget; the greedy value is feasible (a certified lower
/// bound on the worst small-set mass) and the fractional relaxation is an
/// upper bound, so the returned bracket encloses the true optimum.
pub fn doeblin_scan<S: Scalar>(
    qell: &Kernel<S>,
    cert: &DoeblinCertificate<S>,
) -> Result<DoeblinScan<S>> {
    qell.space().check_same(cert.nu.space())?;
    let mut worst = Interval::point(S::zero());
    let mut worst_x = 0usize;
    let mut witness = Vec::new();
    for (x, row) in qell.rows().iter().enumerate() {
        let mut items: Vec<(usize, S, S)> = row
            .entries()
            .iter()
            .map(|&(y, q)| (y, q, cert.nu.weight_at(y)))
            .collect();
        // Singular atoms (nu = 0) first, then by density descending;
        // ties broken by state index for determinism.
        items.sort_by(|a, b| {
            let da = if a.2 > S::zero() {
                a.1 / a.2
            } else {
                S::infinity()
            };
            let db = if b.2 > S::zero() {
                b.1 / b.2
            } else {
                S::infinity()
            };
            db.partial_cmp(&da).unwrap().then(a.0.cmp(&b.0))
        });
        let mut budget = cert.eta;
        let mut lb = S::zero();
        let mut set = Vec::new();
        let mut spill: Option<(S, S)> = None;
        for &(y, q, nv) in &items {
            if nv <= budget {
                budget -= nv;
                lb += q;
                set.push(y);
            } else {
                spill = Some((q, nv));
                break;
            }
        }
        let mut ub = lb;
        if let Some((q, nv)) = spill {
            ub += q * (budget / nv);
        }
        // Unlocated tail mass may sit on a nu-null set: upper side only,
        // since it cannot be pointed to as a witness.
        ub += row.tail_bound();
        let bracket = Interval::new(sum_lower(lb, set.len()), sum_upper(ub, set.len() + 2));
        if bracket.lo > worst.lo {
            worst_x = x;
            witness = set;
        }
        worst = worst.max_pair(bracket);
    }
    Ok(DoeblinScan {
        worst_mass: worst,
        worst_x,
        witness,
    })
}

/// Doeblin split: under condition (D) produce `Q^ell = T_{nu,alpha} + S`
/// with `alpha` the density capped at `eta^{-1} ||Q^ell||`, `S >= 0`, and
/// `||S|| <= rho^ell`. The split keeps the kernel's own entries on the
/// kept set, so `T + S` reproduces `Q^ell` bitwise. When the residual
/// norm exceeds the certified threshold, the capped set of the worst row
/// is itself a condition-(D) witness and the certificate is rejected.
pub fn doeblin_split<S: Scalar>(
    q: &Kernel<S>,
    cert: &DoeblinCertificate<S>,
) -> Result<(DensityKernel<S>, Kernel<S>)> {
    q.space().check_same(cert.nu.space())?;
    let qell = q.power(cert.ell)?;
    let threshold = cert.threshold();

    // Greedy pre-scan: a feasible set already above rho^ell refutes (D).
    let scan = doeblin_scan(&qell, cert)?;
    if scan.worst_mass.lo > sum_upper(threshold, 4) {
        return Err(Error::DoeblinViolated {
            x: scan.worst_x,
            nu_mass: scan.witness_nu_mass(&cert.nu).to_f64(),
            kernel_mass: scan.worst_mass.lo.to_f64(),
            threshold: threshold.to_f64(),
            witness: scan.witness,
        });
    }

    let cap = qell.sup_norm() / cert.eta;
    let space = qell.space();
    let mut alpha = Vec::with_capacity(space.window_len());
    let mut s_rows = Vec::with_capacity(space.window_len());
    let mut s_norm_max = S::zero();
    let mut worst: Option<(usize, Vec<usize>, S)> = None;
    for (x, row) in qell.rows().iter().enumerate() {
        let mut arow = vec![S::zero(); cert.nu.entries().len()];
        let mut s_entries = Vec::new();
        let mut dropped = Vec::new();
        let mut s_mass = row.tail_bound();
        for &(y, qv) in row.entries() {
            let k = cert
                .nu
                .entries()
                .binary_search_by_key(&y, |&(s, _)| s)
                .ok()
                .filter(|&k| cert.nu.entries()[k].1 > S::zero());
            match k {
                Some(k) => {
                    let density = qv / cert.nu.entries()[k].1;
                    if density <= cap {
                        arow[k] = density;
                    } else {
                        s_entries.push((y, qv));
                        dropped.push(y);
                        s_mass += qv;
                    }
                }
                None => {
                    s_entries.push((y, qv));
                    dropped.push(y);
                    s_mass += qv;
                }
            }
        }
        let s_mass_hi = sum_upper(s_mass, s_entries.len() + 1);
        if s_mass_hi > s_norm_max {
            s_norm_max = s_mass_hi;
            worst = Some((x, dropped, s_mass_hi));
        }
        alpha.push(arow);
        s_rows.push(AtomicMeasure::new(space, s_entries, row.tail_bound())?);
    }

    if s_norm_max > sum_upper(threshold, 4) {
        let (x, witness, mass) = worst.expect("worst row recorded");
        let nu_mass: S = witness.iter().map(|&y| cert.nu.weight_at(y)).sum();
        return Err(Error::DoeblinViolated {
            x,
            witness,
            nu_mass: nu_mass.to_f64(),
            kernel_mass: mass.to_f64(),
            threshold: threshold.to_f64(),
        });
    }

    let t = DensityKernel::new(
        cert.nu.clone(),
        (0..space.window_len()).collect(),
        alpha,
        None,
    )?;
    let s = Kernel::new(space, s_rows, false)?;
    Ok((t, s))
}

/// Density-tail functional `partial_nu` of a finite family of positive
/// measures.
///
/// On finite spaces this is the exact limit in `k` (always 0 for the
/// absolutely continuous parts of a finite family). On windowed spaces
/// the window proxies an infinite family: the limit is read off at the
/// largest density level present, and mass beyond the window counts in
/// full (its density against the windowed `nu` is unbounded).
pub fn partial_nu<S: Scalar>(family: &[AtomicMeasure<S>], nu: &AtomicMeasure<S>) -> Result<S> {
    if nu.space().is_finite() {
        for mu in family {
            mu.space().check_same(nu.space())?;
        }
        return Ok(S::zero());
    }
    let mut top_level = S::zero();
    let mut decs = Vec::with_capacity(family.len());
    for mu in family {
        let dec = lebesgue_decompose(mu, nu)?;
        for &d in &dec.density {
            top_level = top_level.max(d);
        }
        decs.push(dec);
    }
    let mut sup = S::zero();
    for (mu, dec) in family.iter().zip(&decs) {
        let mut mass = S::zero();
        if top_level > S::zero() {
            for (k, &d) in dec.density.iter().enumerate() {
                if d >= top_level {
                    mass += d * nu.entries()[k].1;
                }
            }
        }
        mass += dec.singular.beyond_window_mass() + mu.tail_bound();
        sup = sup.max(mass);
    }
    Ok(sup)
}

/// Non-uniform absolute continuity `Delta_nu` bracketed through
/// `partial_nu <= Delta_nu <= partial_nu + sup singular mass`; callers
/// read the midpoint and the recorded width.
pub fn delta_nu<S: Scalar>(
    family: &[AtomicMeasure<S>],
    nu: &AtomicMeasure<S>,
) -> Result<Interval<S>> {
    let lo = partial_nu(family, nu)?;
    let mut sing_sup = S::zero();
    for mu in family {
        let dec = lebesgue_decompose(mu, nu)?;
        let in_window_sing: S = dec
            .singular
            .entries()
            .iter()
            .filter(|&&(y, _)| mu.space().in_window(y))
            .map(|&(_, v)| v)
            .sum();
        let extra = if nu.space().is_finite() {
            // partial is 0 on finite spaces; the singular mass is the
            // whole gap.
            in_window_sing + dec.singular.beyond_window_mass() + mu.tail_bound()
        } else {
            in_window_sing
        };
        sing_sup = sing_sup.max(extra);
    }
    Ok(Interval::new(lo, sum_upper(lo + sing_sup, 4)))
}

/// Exhaustion of the window by increasing finite sets.
#[derive(Clone, Debug)]
pub enum Exhaustion {
    /// Prefixes `{0..=k}`. On finite spaces the exhaustion covers and the
    /// final tail is empty; on windowed spaces the final tail is
    /// `{x_max}` plus everything beyond the window.
    Canonical,
    Custom(Vec<Vec<usize>>),
}

/// Non-uniform sigma-additivity along exhaustion tails:
/// `lim_n sup_mu [mu(window \ F_n) + beyond-window mass]`, evaluated at
/// the final tail. A lower bound for the supremum over all decreasing
/// sequences when tails are nonzero.
pub fn lambda_tail<S: Scalar>(family: &[AtomicMeasure<S>], exhaustion: &Exhaustion) -> Result<S> {
    if family.is_empty() {
        return Ok(S::zero());
    }
    let space = family[0].space();
    let final_set: Vec<usize> = match exhaustion {
        Exhaustion::Canonical => {
            if space.is_finite() {
                (0..space.window_len()).collect()
            } else {
                (0..space.window_len() - 1).collect()
            }
        }
        Exhaustion::Custom(sets) => sets
            .last()
            .cloned()
            .ok_or_else(|| Error::Invalid("empty exhaustion".into()))?,
    };
    let mut sup = S::zero();
    for mu in family {
        space.check_same(mu.space())?;
        let mut mass = mu.tail_bound();
        for &(y, v) in mu.entries() {
            if !final_set.contains(&y) {
                mass += v;
            }
        }
        sup = sup.max(mass);
    }
    Ok(sup)
}

/// Density ladder from dyadic partition refinement: cell-average
/// densities of `K` against the row-normalized reference `R` at levels
/// `1..=depth`.
#[derive(Clone, Debug)]
pub struct DensityLadder<S: Scalar> {
    /// `levels[n-1][x][cell]` is the level-`n` density for row `x`.
    pub levels: Vec<Vec<Vec<S>>>,
    /// Finest-level cells whose value kept growing by a factor close to
    /// 2 per refinement: atoms / singular residue.
    pub flagged_singular: Vec<(usize, usize)>,
    /// Cells where the reference row had no mass but the kernel did.
    pub zero_mass_cells: Vec<(usize, usize)>,
    /// Per-row kernel mass on zero-reference cells at the finest level.
    pub singular_residual: Vec<S>,
}

pub fn partition_density<S: Scalar>(
    k: &Kernel<S>,
    r: &Kernel<S>,
    depth: usize,
) -> Result<DensityLadder<S>> {
    k.space().check_same(r.space())?;
    if !k.space().is_finite() {
        return Err(Error::FiniteOnly);
    }
    let n = k.space().window_len();
    if depth < 1 || !n.is_power_of_two() || n < (1usize << depth) {
        return Err(Error::Invalid(format!(
            "grid size {n} must be a power of two >= 2^depth"
        )));
    }
    let r_mass: Vec<S> = (0..n).map(|x| r.row(x).total_variation()).collect();
    if r_mass.iter().any(|&m| m <= S::zero()) {
        return Err(Error::Invalid(
            "reference rows must have positive mass".into(),
        ));
    }

    let mut levels = Vec::with_capacity(depth);
    let mut zero_mass_cells = Vec::new();
    let mut singular_residual = vec![S::zero(); n];
    for level in 1..=depth {
        let cells = 1usize << level;
        let cell_len = n / cells;
        let mut per_row = Vec::with_capacity(n);
        for x in 0..n {
            let mut row_vals = Vec::with_capacity(cells);
            for c in 0..cells {
                let lo = c * cell_len;
                let hi = lo + cell_len;
                let mut km = S::zero();
                let mut rm = S::zero();
                for y in lo..hi {
                    km += k.row(x).weight_at(y);
                    rm += r.row(x).weight_at(y) / r_mass[x];
                }
                if rm > S::zero() {
                    row_vals.push(km / rm);
                } else {
                    row_vals.push(S::zero());
                    if km > S::zero() && level == depth {
                        zero_mass_cells.push((x, c));
                        singular_residual[x] += km;
                    }
                }
            }
            per_row.push(row_vals);
        }
        levels.push(per_row);
    }

    // Flag finest cells that kept doubling: diverging cell density, the
    // discrete signature of an atom relative to the reference.
    let mut flagged = Vec::new();
    if depth >= 3 {
        let growth = S::lit(1.8);
        let cells = 1usize << depth;
        for x in 0..n {
            for c in 0..cells {
                let v2 = levels[depth - 1][x][c];
                let v1 = levels[depth - 2][x][c / 2];
                let v0 = levels[depth - 3][x][c / 4];
                if v0 > S::zero() && v1 >= growth * v0 && v2 >= growth * v1 {
                    flagged.push((x, c));
                }
            }
        }
    }
    Ok(DensityLadder {
        levels,
        flagged_singular: flagged,
        zero_mass_cells,
        singular_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::StateSpace;

    fn uniform_nu(n: usize) -> AtomicMeasure<f64> {
        AtomicMeasure::uniform(StateSpace::finite(n))
    }

    #[test]
    fn decompose_identity_density() {
        let nu = uniform_nu(4);
        let dec = lebesgue_decompose(&nu, &nu).unwrap();
        for d in dec.density {
            assert!((d - 1.0).abs() < 1e-15);
        }
        assert!(dec.singular.entries().is_empty());
    }

    #[test]
    fn decompose_dirac_against_uniform() {
        let nu = uniform_nu(4);
        let mu = AtomicMeasure::dirac(StateSpace::finite(4), 0);
        let dec = lebesgue_decompose(&mu, &nu).unwrap();
        assert_eq!(dec.density, vec![4.0, 0.0, 0.0, 0.0]);
        assert!(dec.singular.entries().is_empty());
    }

    #[test]
    fn decompose_fully_singular() {
        let sp = StateSpace::finite(4);
        let nu = AtomicMeasure::new(sp, vec![(0, 0.5), (1, 0.5)], 0.0).unwrap();
        let mu = AtomicMeasure::dirac(sp, 2);
        let dec = lebesgue_decompose(&mu, &nu).unwrap();
        assert!(dec.density.iter().all(|&d| d == 0.0));
        assert_eq!(dec.singular.entries(), &[(2, 1.0)]);
    }

    #[test]
    fn reconstruction_is_exact() {
        let sp = StateSpace::finite(5);
        let nu = AtomicMeasure::new(sp, vec![(0, 0.1), (1, 0.3), (2, 0.2), (3, 0.4)], 0.0).unwrap();
        let mu = AtomicMeasure::new(sp, vec![(0, 0.25), (2, 0.5), (4, 0.25)], 0.0).unwrap();
        let dec = lebesgue_decompose(&mu, &nu).unwrap();
        for y in 0..5 {
            let ac: f64 = nu
                .entries()
                .iter()
                .zip(&dec.density)
                .filter(|&(&(s, _), _)| s == y)
                .map(|(&(_, nv), &d)| d * nv)
                .sum();
            let total = ac + dec.singular.weight_at(y);
            assert!((total - mu.weight_at(y)).abs() <= 1e-14);
        }
    }

    #[test]
    fn kernel_decompose_rank_one() {
        let nu = uniform_nu(3);
        let k = Kernel::rank_one(&nu).unwrap();
        let (dk, sing) = kernel_decompose(&k, &nu).unwrap();
        for x in 0..3 {
            for a in &dk.alpha()[x] {
                assert!((a - 1.0).abs() < 1e-15);
            }
            assert!(sing.row(x).entries().is_empty());
        }
    }

    #[test]
    fn kernel_decompose_mixture() {
        // K(x,.) = 0.5 nu + 0.5 delta_x with nu uniform on n states:
        // alpha(x,y) = 0.5 + 0.5 n 1_{y=x}.
        let n = 4;
        let sp = StateSpace::finite(n);
        let nu = uniform_nu(n);
        let rows = (0..n)
            .map(|x| {
                AtomicMeasure::uniform(sp)
                    .scaled(0.5)
                    .add_scaled(0.5, &AtomicMeasure::dirac(sp, x))
                    .unwrap()
            })
            .collect();
        let k = Kernel::positive(sp, rows, true).unwrap();
        let (dk, sing) = kernel_decompose(&k, &nu).unwrap();
        for x in 0..n {
            for (k_idx, &a) in dk.alpha()[x].iter().enumerate() {
                let expected = if k_idx == x {
                    0.5 + 0.5 * n as f64
                } else {
                    0.5
                };
                assert!((a - expected).abs() < 1e-12);
            }
            assert!(sing.row(x).entries().is_empty());
        }
    }

    #[test]
    fn ui_tail_steps() {
        // alpha(n, y) = 2^(n+1) 1_{y=n} against nu({n}) = 2^(-n-1):
        // every qualifying row contributes its full mass 1.
        let n = 8;
        let sp = StateSpace::windowed(n - 1);
        let mut entries: Vec<(usize, f64)> =
            (0..n).map(|y| (y, 0.5f64.powi(y as i32 + 1))).collect();
        let deficit = 1.0 - entries.iter().map(|e| e.1).sum::<f64>();
        entries[0].1 += deficit;
        let nu = AtomicMeasure::new(sp, entries, 0.0).unwrap();
        let alpha: Vec<Vec<f64>> = (0..n)
            .map(|x| {
                (0..n)
                    .map(|k| if k == x { 1.0 / nu.entries()[k].1 } else { 0.0 })
                    .collect()
            })
            .collect();
        let dk = DensityKernel::new(nu, (0..n).collect(), alpha, None).unwrap();
        for m in [0.0, 1.0, 4.0, 100.0] {
            let t = ui_tail(&dk, m).unwrap();
            assert!((t - 1.0).abs() < 1e-12, "m={m}: {t}");
        }
        let t = ui_tail(&dk, 1e9).unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn ui_tail_bounded_vanishes() {
        let nu = uniform_nu(5);
        let alpha = vec![vec![1.0; 5]; 5];
        let dk = DensityKernel::new(nu, (0..5).collect(), alpha, None).unwrap();
        assert_eq!(ui_tail(&dk, 2.0).unwrap(), 0.0);
        assert!((ui_tail(&dk, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doeblin_split_rank_one() {
        let nu = uniform_nu(4);
        let q = Kernel::rank_one(&nu).unwrap();
        let cert = DoeblinCertificate::new(1, nu, 0.3, 0.5).unwrap();
        let (t, s) = doeblin_split(&q, &cert).unwrap();
        assert_eq!(s.sup_norm(), 0.0);
        for row in t.alpha() {
            for &a in row {
                assert!((a - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn doeblin_split_mixture_vacuous_condition() {
        // Q(x,.) = 0.5 nu + 0.5 delta_x on 4 states, eta = 1/(2n): no
        // nonempty A has nu(A) <= eta, the cap exceeds the max density,
        // alpha keeps everything and S = 0.
        let n = 4;
        let sp = StateSpace::finite(n);
        let nu = uniform_nu(n);
        let rows = (0..n)
            .map(|x| {
                AtomicMeasure::uniform(sp)
                    .scaled(0.5)
                    .add_scaled(0.5, &AtomicMeasure::dirac(sp, x))
                    .unwrap()
            })
            .collect();
        let q = Kernel::positive(sp, rows, true).unwrap();
        let cert = DoeblinCertificate::new(1, nu, 0.125, 0.9).unwrap();
        let (t, s) = doeblin_split(&q, &cert).unwrap();
        assert_eq!(s.sup_norm(), 0.0);
        assert!((t.alpha_sup() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn doeblin_split_detects_violation() {
        // A heavy atom on a nu-small state breaks (D).
        let n = 4;
        let sp = StateSpace::finite(n);
        let nu =
            AtomicMeasure::new(sp, vec![(0, 0.97), (1, 0.01), (2, 0.01), (3, 0.01)], 0.0).unwrap();
        let rows = (0..n)
            .map(|_| AtomicMeasure::new(sp, vec![(0, 0.2), (3, 0.8)], 0.0).unwrap())
            .collect();
        let q = Kernel::positive(sp, rows, true).unwrap();
        let cert = DoeblinCertificate::new(1, nu, 0.02, 0.5).unwrap();
        match doeblin_split(&q, &cert) {
            Err(Error::DoeblinViolated { witness, .. }) => {
                assert!(witness.contains(&3));
            }
            other => panic!("expected DoeblinViolated, got {other:?}"),
        }
    }

    #[test]
    fn set_functions_finite_full_support() {
        let nu = uniform_nu(6);
        let family: Vec<AtomicMeasure<f64>> = (0..6)
            .map(|x| AtomicMeasure::dirac(StateSpace::finite(6), x))
            .collect();
        assert_eq!(partial_nu(&family, &nu).unwrap(), 0.0);
        let d = delta_nu(&family, &nu).unwrap();
        assert_eq!(d.lo, 0.0);
        assert!(d.hi < 1e-12);
        assert_eq!(lambda_tail(&family, &Exhaustion::Canonical).unwrap(), 0.0);
    }

    #[test]
    fn set_functions_dyadic_family() {
        // M = {delta_n}, nu({n}) = 2^(-n-1) on a window: the density
        // 2^(n+1) grows along the family, so all three functionals see 1.
        let n = 10;
        let sp = StateSpace::windowed(n - 1);
        let mut entries: Vec<(usize, f64)> =
            (0..n).map(|y| (y, 0.5f64.powi(y as i32 + 1))).collect();
        let deficit = 1.0 - entries.iter().map(|e| e.1).sum::<f64>();
        entries[0].1 += deficit;
        let nu = AtomicMeasure::new(sp, entries, 0.0).unwrap();
        let family: Vec<AtomicMeasure<f64>> = (0..n).map(|x| AtomicMeasure::dirac(sp, x)).collect();
        let p = partial_nu(&family, &nu).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let d = delta_nu(&family, &nu).unwrap();
        assert!((d.lo - 1.0).abs() < 1e-12);
        let l = lambda_tail(&family, &Exhaustion::Canonical).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!(l <= d.lo + 1e-12);
    }

    #[test]
    fn lambda_custom_exhaustion_final_tail() {
        let sp = StateSpace::finite(5);
        let family: Vec<AtomicMeasure<f64>> = vec![
            AtomicMeasure::new(sp, vec![(0, 0.5), (4, 0.5)], 0.0).unwrap(),
            AtomicMeasure::new(sp, vec![(2, 1.0)], 0.0).unwrap(),
        ];
        // Final set {0, 1, 2}: the tail {3, 4} holds 0.5 of the first
        // measure.
        let ex = Exhaustion::Custom(vec![vec![0], vec![0, 1], vec![0, 1, 2]]);
        let l = lambda_tail(&family, &ex).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delta_brackets_mixed_family() {
        // mu = 0.5 (bounded a.c.) + 0.5 (singular): partial 0 on a finite
        // space, Delta bracketed in [0, 0.5].
        let sp = StateSpace::finite(4);
        let nu = AtomicMeasure::new(sp, vec![(0, 0.5), (1, 0.5)], 0.0).unwrap();
        let mu: AtomicMeasure<f64> =
            AtomicMeasure::new(sp, vec![(0, 0.25), (1, 0.25), (2, 0.5)], 0.0).unwrap();
        let family = vec![mu];
        assert_eq!(partial_nu(&family, &nu).unwrap(), 0.0);
        let d = delta_nu(&family, &nu).unwrap();
        assert_eq!(d.lo, 0.0);
        assert!((d.hi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partition_density_exact_for_equal_kernels() {
        let n = 16;
        let sp = StateSpace::finite(n);
        let nu: AtomicMeasure<f64> = AtomicMeasure::uniform(sp);
        let k = Kernel::rank_one(&nu).unwrap();
        let ladder = partition_density(&k, &k, 3).unwrap();
        for level in &ladder.levels {
            for row in level {
                for &v in row {
                    assert!((v - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(ladder.flagged_singular.is_empty());
    }

    #[test]
    fn partition_density_linear_density() {
        // Grid points at midpoints y_j = (j + 0.5)/G; K has density
        // proportional to 2y against the uniform reference. Cell averages
        // at level n are midpoint values, within 2^(1-n) of the density.
        let g = 64usize;
        let depth = 4usize;
        let sp = StateSpace::finite(g);
        let un = AtomicMeasure::uniform(sp);
        let r = Kernel::rank_one(&un).unwrap();
        let total: f64 = (0..g).map(|j| 2.0 * (j as f64 + 0.5) / g as f64).sum();
        let k_rows: Vec<AtomicMeasure<f64>> = (0..g)
            .map(|_| {
                AtomicMeasure::new(
                    sp,
                    (0..g)
                        .map(|j| (j, 2.0 * (j as f64 + 0.5) / g as f64 / total))
                        .collect(),
                    0.0,
                )
                .unwrap()
            })
            .collect();
        let k = Kernel::positive(sp, k_rows, false).unwrap();
        let ladder = partition_density(&k, &r, depth).unwrap();
        for (lvl_idx, level) in ladder.levels.iter().enumerate() {
            let n_lvl = lvl_idx + 1;
            let cells = 1usize << n_lvl;
            for row in level {
                for (c, &v) in row.iter().enumerate() {
                    let mid = (c as f64 + 0.5) / cells as f64;
                    let expected = 2.0 * mid / (total / g as f64);
                    assert!(
                        (v - expected).abs() <= 2.0 * 0.5f64.powi(n_lvl as i32) + 1e-9,
                        "level {n_lvl} cell {c}: {v} vs {expected}"
                    );
                }
            }
        }
        assert!(ladder.flagged_singular.is_empty());
    }

    #[test]
    fn partition_density_flags_atom() {
        let g = 32usize;
        let depth = 4usize;
        let sp = StateSpace::finite(g);
        let un = AtomicMeasure::uniform(sp);
        let r = Kernel::rank_one(&un).unwrap();
        // Mostly an atom at state 5, with a thin uniform background.
        let rows: Vec<AtomicMeasure<f64>> = (0..g)
            .map(|_| {
                AtomicMeasure::uniform(sp)
                    .scaled(0.1)
                    .add_scaled(0.9, &AtomicMeasure::dirac(sp, 5))
                    .unwrap()
            })
            .collect();
        let k = Kernel::positive(sp, rows, true).unwrap();
        let ladder = partition_density(&k, &r, depth).unwrap();
        let atom_cell_at = |lvl: usize| 5usize / (g >> lvl);
        let v2 = ladder.levels[1][0][atom_cell_at(2)];
        let v3 = ladder.levels[2][0][atom_cell_at(3)];
        let v4 = ladder.levels[3][0][atom_cell_at(4)];
        assert!(v3 / v2 > 1.8 && v4 / v3 > 1.8);
        assert!(ladder.flagged_singular.contains(&(0, atom_cell_at(depth))));
    }
}
