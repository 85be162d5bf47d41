//! Stationary states of anharmonic potentials as fixed points of the
//! truncated hierarchy, closed by the energy recursion for position moments.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::eom::{hand_system, CompiledRhs};
use crate::error::{Error, Result};
use crate::inequalities::{check_all, check_heisenberg, SchwarzSuite};
use crate::moments::{keys, Flavor, MomentKey, MomentSet, TruncationPolicy};
use crate::potential::PolynomialPotential;
use crate::symbolic::{Expr, Rational, Target};

/// Position moments G^{0,n}, n = 0..=up_to, of a stationary state of
/// V = λq^m centered at q = 0:
///
/// λ(2k+m+2) G^{0,k+m} = 2E(k+1) G^{0,k} + ħ²(k+1)k(k−1) G^{0,k−2}/4.
///
/// `seeds` holds G^{0,0}..G^{0,m−1} (missing entries are zero, G^{0,0} is
/// forced to 1). Classical moments drop the ħ² term.
pub fn position_recursion(
    m: usize,
    lambda: f64,
    e: f64,
    hbar: f64,
    seeds: &[f64],
    up_to: usize,
    flavor: Flavor,
) -> Result<Vec<f64>> {
    if m == 0 || lambda == 0.0 {
        return Err(Error::InvalidArgument(format!("recursion needs m ≥ 1 and λ ≠ 0 (m={m}, λ={lambda})")));
    }
    let mut g = vec![0.0; up_to + 1];
    for (n, s) in seeds.iter().enumerate().take(m.min(up_to + 1)) {
        g[n] = *s;
    }
    g[0] = 1.0;
    let h2 = if flavor == Flavor::Quantum { hbar * hbar } else { 0.0 };
    for k in 0..=up_to.saturating_sub(m) {
        let kf = k as f64;
        let low = if k >= 2 { h2 / 4.0 * (kf + 1.0) * kf * (kf - 1.0) * g[k - 2] } else { 0.0 };
        g[k + m] = (2.0 * e * (kf + 1.0) * g[k] + low) / (lambda * (2.0 * kf + m as f64 + 2.0));
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    #[serde(skip)]
    pub state: MomentSet,
    pub energy: f64,
    pub g02: f64,
    pub lambda: f64,
    pub n_max: usize,
    /// ‖Ax − b‖/‖b‖ of the assembled linear system.
    pub residual: f64,
}

/// One linear equation Σ c_i x_i = rhs over the unknown moments, in exact
/// arithmetic: the systems at large cutoffs are far too ill-conditioned for
/// floating point.
#[derive(Debug, Clone, Default)]
struct Row {
    coeffs: BTreeMap<usize, BigRational>,
    rhs: BigRational,
}

impl Row {
    fn add(&mut self, i: usize, c: BigRational) {
        let e = self.coeffs.entry(i).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&i);
        }
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn big(c: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*c.numer()), BigInt::from(*c.denom()))
}

/// Substitutes the centroid, ħ and the known moments into `e`; every term may
/// contain at most one unknown moment.
fn linearize(
    e: &Expr,
    v: &PolynomialPotential,
    q: &BigRational,
    hbar: &BigRational,
    known: &dyn Fn(MomentKey) -> Option<BigRational>,
    index: &BTreeMap<MomentKey, usize>,
) -> Result<Row> {
    let mut row = Row::default();
    for (m, c) in e.terms() {
        if m.p_pow > 0 {
            // p = 0 at a fixed point
            continue;
        }
        let mut x = big(c);
        if let Some(k) = m.lambda {
            x *= exact(v.coefficient(k));
        }
        x *= num_traits::pow(q.clone(), m.q_pow as usize) * num_traits::pow(hbar.clone(), m.hbar_pow as usize);
        let mut unknown = None;
        for f in &m.factors {
            match known(*f) {
                Some(val) => x *= val,
                None if unknown.is_none() => unknown = Some(index[f]),
                None => return Err(Error::InvalidArgument("stationarity condition is not linear".into())),
            }
        }
        if x.is_zero() {
            continue;
        }
        match unknown {
            Some(i) => row.add(i, x),
            None => row.rhs -= x,
        }
    }
    Ok(row)
}

/// Gauss–Jordan elimination. Returns the solution and the relative residual
/// ‖Ax − b‖/‖b‖ of the rows left over once every unknown has a pivot.
fn solve_rows(rows: Vec<Row>, n: usize) -> Result<(Vec<f64>, f64)> {
    let b_norm = rows.iter().map(|r| r.rhs.to_f64().unwrap_or(0.0).powi(2)).sum::<f64>().sqrt();
    let mut rest: Vec<Row> = rows.into_iter().filter(|r| !r.coeffs.is_empty() || !r.rhs.is_zero()).collect();
    let mut pivots: Vec<(usize, Row)> = Vec::with_capacity(n);
    for j in 0..n {
        let Some(pi) = rest
            .iter()
            .enumerate()
            .filter(|(_, r)| r.coeffs.contains_key(&j))
            .min_by_key(|(_, r)| r.coeffs.len())
            .map(|(i, _)| i)
        else {
            return Err(Error::Singular(format!("no pivot for unknown {j} of {n}")));
        };
        let mut p = rest.swap_remove(pi);
        let inv = p.coeffs[&j].recip();
        for c in p.coeffs.values_mut() {
            *c *= &inv;
        }
        p.rhs *= &inv;
        let reduce = |r: &mut Row| {
            if let Some(f) = r.coeffs.get(&j).cloned() {
                for (&k, c) in &p.coeffs {
                    r.add(k, -(c * &f));
                }
                r.rhs -= &p.rhs * &f;
            }
        };
        rest.iter_mut().for_each(reduce);
        pivots.iter_mut().for_each(|(_, r)| reduce(r));
        pivots.push((j, p));
    }
    let mut x = vec![0.0; n];
    for (j, r) in &pivots {
        debug_assert_eq!(r.coeffs.len(), 1);
        x[*j] = r.rhs.to_f64().unwrap_or(f64::NAN);
    }
    let res = rest.iter().map(|r| r.rhs.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt();
    Ok((x, res / b_norm.max(f64::MIN_POSITIVE)))
}

fn check_quartic_args(e: f64, g02: f64, lambda: f64, hbar: f64, n_max: usize) -> Result<()> {
    if !(e > 0.0 && g02 > 0.0 && lambda > 0.0 && hbar >= 0.0) {
        return Err(Error::InvalidArgument(format!("E={e}, G02={g02}, λ={lambda}, ħ={hbar}")));
    }
    if n_max < 6 {
        return Err(Error::InvalidArgument(format!("cutoff {n_max} < 6")));
    }
    Ok(())
}

/// The q = 0 stationary moments without the sign check on even-even entries.
/// Moments close to the cutoff are affected by the truncation and may be
/// negative even when the low-order ones are physical.
pub fn quartic_stationary_moments(e: f64, g02: f64, lambda: f64, hbar: f64, n_max: usize) -> Result<StationarySolution> {
    check_quartic_args(e, g02, lambda, hbar, n_max)?;
    let flavor = if hbar > 0.0 { Flavor::Quantum } else { Flavor::Classical };
    let v = PolynomialPotential::quartic(lambda);
    let index: BTreeMap<MomentKey, usize> = keys(n_max)
        .filter(|k| k.is_even_even() && *k != MomentKey::new(0, 2))
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    let (eq, gq, lq, hq) = (exact(e), exact(g02), exact(lambda), exact(hbar));
    let known = |k: MomentKey| {
        if k == MomentKey::new(0, 2) {
            Some(gq.clone())
        } else if !k.is_even_even() {
            Some(BigRational::zero())
        } else {
            None
        }
    };
    let mut rows = Vec::new();
    for (t, expr) in &hand_system(&v, flavor, n_max).equations {
        if let Target::Moment(_) = t {
            rows.push(linearize(expr, &v, &BigRational::zero(), &hq, &known, &index)?);
        }
    }
    // 2λ(a+3) G^{0,a+4} = 2E(a+1) G^{0,a} + ħ²(a+1)a(a−1) G^{0,a−2}/4
    let g0 = |n: usize, c: BigRational, row: &mut Row| match n {
        0 => row.rhs -= c,
        2 => row.rhs -= c * &gq,
        _ => row.add(index[&MomentKey::new(0, n)], c),
    };
    let int = |n: usize| BigRational::from_integer(BigInt::from(n));
    for a in (0..).step_by(2).take_while(|a| a + 4 <= n_max) {
        let mut row = Row::default();
        g0(a + 4, int(2 * (a + 3)) * &lq, &mut row);
        g0(a, -(int(2 * (a + 1)) * &eq), &mut row);
        if a >= 2 {
            g0(a - 2, -(&hq * &hq * int((a + 1) * a * (a - 1)) / int(4)), &mut row);
        }
        rows.push(row);
    }
    // E = G^{2,0}/2 + λ G^{0,4}
    let mut row = Row { rhs: eq.clone(), ..Default::default() };
    row.add(index[&MomentKey::new(2, 0)], BigRational::new(1.into(), 2.into()));
    row.add(index[&MomentKey::new(0, 4)], lq.clone());
    rows.push(row);

    let (x, residual) = solve_rows(rows, index.len())?;
    let mut state = MomentSet::zeros(flavor, hbar, n_max)?;
    state.set(0, 2, g02);
    for (k, &i) in &index {
        state.set(k.a, k.b, x[i]);
    }
    Ok(StationarySolution { state, energy: e, g02, lambda, n_max, residual })
}

/// Highest order whose moments no longer move when the cutoff is raised;
/// above it the values are artefacts of the truncation.
pub const fn converged_order(n_max: usize) -> usize {
    n_max / 2
}

/// Stationary state of V = λq⁴ at q = p = 0 for given energy and G^{0,2}.
/// Rejects solutions with a negative even-even moment among the converged
/// orders.
pub fn solve_quartic_stationary(e: f64, g02: f64, lambda: f64, hbar: f64, n_max: usize) -> Result<StationarySolution> {
    let sol = quartic_stationary_moments(e, g02, lambda, hbar, n_max)?;
    reject_negative(&sol.state, converged_order(n_max))?;
    // with G^{2,0} = 4E/3 this is E·G^{0,2} ≥ 3ħ²/16
    let h = check_heisenberg(&sol.state);
    if h.margin < -1e-12 * sol.state.get(2, 0) * g02 {
        return Err(Error::InvalidSolution(format!("uncertainty relation violated by {:.3e}", h.margin)));
    }
    Ok(sol)
}

fn reject_negative(state: &MomentSet, max_order: usize) -> Result<()> {
    let mut even = state.keys().filter(|k| k.is_even_even() && k.order() <= max_order);
    if let Some(k) = even.find(|k| state.get(k.a, k.b) < 0.0) {
        return Err(Error::InvalidSolution(format!("{k} = {:.6e} < 0", state.get(k.a, k.b))));
    }
    Ok(())
}

/// Stationary candidate of V = λq⁴ with the centroid displaced to q ≠ 0.
/// dp/dt = 0 fixes G^{0,3} = −q³ − 3qG^{0,2}; the remaining moment equations
/// and the energy are then linear in the other moments. Returns the moments
/// without the sign check; see [`solve_displaced_quartic`].
pub fn displaced_quartic_moments(q: f64, e: f64, g02: f64, lambda: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    check_quartic_args(e, g02, lambda, hbar, n_max)?;
    let flavor = if hbar > 0.0 { Flavor::Quantum } else { Flavor::Classical };
    let v = PolynomialPotential::quartic(lambda);
    let (eq, gq, lq, hq, qq) = (exact(e), exact(g02), exact(lambda), exact(hbar), exact(q));
    let g03q = -(&qq * &qq * &qq) - BigRational::from_integer(3.into()) * &qq * &gq;
    let g03 = g03q.to_f64().unwrap_or(f64::NAN);
    let fixed = [MomentKey::new(0, 2), MomentKey::new(0, 3)];
    let index: BTreeMap<MomentKey, usize> =
        keys(n_max).filter(|k| !fixed.contains(k)).enumerate().map(|(i, k)| (k, i)).collect();
    let known = |k: MomentKey| match (k.a, k.b) {
        (0, 2) => Some(gq.clone()),
        (0, 3) => Some(g03q.clone()),
        _ => None,
    };
    let mut rows = Vec::new();
    for (t, expr) in &hand_system(&v, flavor, n_max).equations {
        if let Target::Moment(_) = t {
            rows.push(linearize(expr, &v, &qq, &hq, &known, &index)?);
        }
    }
    // E = H_Q = V(q) + G^{2,0}/2 + 6λq²G^{0,2} + 4λqG^{0,3} + λG^{0,4}
    let pot = &lq
        * (&qq * &qq * &qq * &qq
            + BigRational::from_integer(6.into()) * &qq * &qq * &gq
            + BigRational::from_integer(4.into()) * &qq * &g03q);
    let mut row = Row { rhs: eq - pot, ..Default::default() };
    row.add(index[&MomentKey::new(2, 0)], BigRational::new(1.into(), 2.into()));
    row.add(index[&MomentKey::new(0, 4)], lq.clone());
    rows.push(row);
    let (x, _) = solve_rows(rows, index.len())?;
    let mut state = MomentSet::zeros(flavor, hbar, n_max)?;
    state.q = q;
    state.set(0, 2, g02);
    state.set(0, 3, g03);
    for (k, &i) in &index {
        state.set(k.a, k.b, x[i]);
    }
    Ok(state)
}

pub fn solve_displaced_quartic(q: f64, e: f64, g02: f64, lambda: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    let s = displaced_quartic_moments(q, e, g02, lambda, hbar, n_max)?;
    reject_negative(&s, n_max)?;
    Ok(s)
}

/// Largest |dG/dt| relative to the largest moment magnitude of the same
/// order, over orders ≤ `max_order`.
pub fn fixed_point_residual(sol: &StationarySolution, max_order: usize) -> Result<f64> {
    let v = PolynomialPotential::quartic(sol.lambda);
    let s = &sol.state;
    let rhs = CompiledRhs::new(&v, s.flavor, s.hbar, TruncationPolicy { n_max: s.n_max })?;
    let y = crate::eom::state_vector(s);
    let mut dy = vec![0.0; y.len()];
    rhs.eval(&y, &mut dy);
    let mut worst = dy[0].abs().max(dy[1].abs());
    for (k, d) in keys(s.n_max).zip(&dy[2..]) {
        if k.order() > max_order {
            continue;
        }
        // the derivative of an order-n moment mixes orders n−2..n+2
        let scale = (k.order().saturating_sub(2)..=(k.order() + 2).min(s.n_max))
            .flat_map(|n| (0..=n).map(move |b| (n - b, b)))
            .map(|(a, b)| s.get(a, b).abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        worst = worst.max(d.abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentAgreement {
    pub a: usize,
    pub b: usize,
    pub relative_difference: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffComparison {
    pub cutoff: usize,
    pub reference: usize,
    /// Largest n such that every moment of order ≤ n agrees.
    pub agrees_through: usize,
    /// Smallest order with a disagreeing moment (None if all agree).
    pub first_disagreement: Option<usize>,
    pub moments: Vec<MomentAgreement>,
}

pub const AGREEMENT_TOLERANCE: f64 = 1e-10;

/// Compares the solution at each cutoff against the one at the largest cutoff.
pub fn convergence_study(e: f64, g02: f64, lambda: f64, hbar: f64, cutoffs: &[usize]) -> Result<Vec<CutoffComparison>> {
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("need at least two strictly ascending cutoffs".into()));
    }
    let reference = *cutoffs.last().expect("non-empty");
    let ref_sol = quartic_stationary_moments(e, g02, lambda, hbar, reference)?;
    let mut out = Vec::new();
    for &c in &cutoffs[..cutoffs.len() - 1] {
        let sol = quartic_stationary_moments(e, g02, lambda, hbar, c)?;
        let mut moments = Vec::new();
        let mut first_disagreement = None;
        for k in keys(c) {
            let (x, y) = (sol.state.get(k.a, k.b), ref_sol.state.get(k.a, k.b));
            let d = (x - y).abs();
            let rel = if d == 0.0 { 0.0 } else { d / x.abs().max(y.abs()) };
            let agrees = rel <= AGREEMENT_TOLERANCE;
            if !agrees && first_disagreement.is_none() {
                first_disagreement = Some(k.order());
            }
            moments.push(MomentAgreement { a: k.a, b: k.b, relative_difference: rel, agrees });
        }
        let agrees_through = first_disagreement.map_or(c, |n| n - 1);
        out.push(CutoffComparison { cutoff: c, reference, agrees_through, first_disagreement, moments });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub order: usize,
    /// Interval endpoints in units of (ħ⁴λ)^{1/3}.
    pub lower: f64,
    pub upper: f64,
    pub grid: EnergyGrid,
    pub refined_by: String,
    /// False if the feasible grid points do not form one run.
    pub contiguous: bool,
}

/// Cutoff of the stationary solve behind the bounds; moments up to order 8
/// are fixed by then.
const BOUNDS_CUTOFF: usize = 20;

/// Whether the saturated ground-state candidate with energy
/// ε·(ħ⁴λ)^{1/3} satisfies every constraint involving moments up to `order`.
pub fn bounds_feasible(eps: f64, lambda: f64, hbar: f64, order: usize, suite: &SchwarzSuite) -> Result<bool> {
    let e = eps * (hbar.powi(4) * lambda).cbrt();
    let g02 = 3.0 * hbar * hbar / (16.0 * e);
    let sol = quartic_stationary_moments(e, g02, lambda, hbar, BOUNDS_CUTOFF.max(order + 4))?;
    let s = sol.state.with_cutoff(order)?;
    Ok(check_all(&s, Some(suite))?.passed())
}

/// Interval of ground energies compatible with the inequalities up to
/// `order` under Heisenberg saturation G^{0,2} = 3ħ²/(16E).
pub fn ground_energy_bounds(lambda: f64, hbar: f64, order: usize) -> Result<BoundsReport> {
    if order < 4 || order % 2 != 0 || order > 10 {
        return Err(Error::InvalidArgument(format!("inequality order {order} not in 4, 6, 8, 10")));
    }
    if !(lambda > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("λ={lambda}, ħ={hbar}")));
    }
    let suite = SchwarzSuite::new(order / 2, hbar)?;
    let grid = EnergyGrid { start: 0.3, stop: 1.2, points: 181 };
    let step = (grid.stop - grid.start) / (grid.points - 1) as f64;
    let eps: Vec<f64> = (0..grid.points).map(|i| grid.start + i as f64 * step).collect();
    let ok: Vec<bool> = eps.iter().map(|&x| bounds_feasible(x, lambda, hbar, order, &suite)).collect::<Result<_>>()?;
    let first = ok.iter().position(|&b| b).ok_or_else(|| Error::EmptyFeasibleSet(format!("no feasible energy for order {order}")))?;
    let last = ok.iter().rposition(|&b| b).expect("non-empty");
    if first == 0 || last == ok.len() - 1 {
        return Err(Error::Numerical("feasible set touches the scan boundary".into()));
    }
    let contiguous = ok[first..=last].iter().all(|&b| b);
    let refine = |mut inside: f64, mut outside: f64| -> Result<f64> {
        while (inside - outside).abs() > 1e-12 {
            let mid = 0.5 * (inside + outside);
            if bounds_feasible(mid, lambda, hbar, order, &suite)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    let lower = refine(eps[first], eps[first - 1])?;
    let upper = refine(eps[last], eps[last + 1])?;
    Ok(BoundsReport { order, lower, upper, grid, refined_by: "bisection".into(), contiguous })
}
