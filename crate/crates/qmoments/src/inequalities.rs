//! Validity constraints on moment sets.
//!
//! Two families of higher-order constraints are provided:
//!
//! * [`moment_matrix`]: positivity of the full Gram matrix of Weyl monomials
//!   up to a degree;
//! * [`SchwarzSuite`]: the pairwise Cauchy–Schwarz inequalities
//!   |⟨A†B⟩|² ≤ ⟨A†A⟩⟨B†B⟩ over ordered operator words A, B in δq̂, δp̂. These
//!   are the suites used for the ground-energy bounds and trajectory
//!   monitoring (see the README for why).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::moments::{Flavor, MomentKey, MomentSet};
use crate::weyl::{HbarSeries, WeylPolynomial};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub id: String,
    pub margin: f64,
    pub worst_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub constraints: Vec<Constraint>,
    pub tolerance: f64,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.constraints.iter().all(|c| c.margin >= -self.tolerance)
    }

    pub fn worst(&self) -> Option<&Constraint> {
        self.constraints.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
    }

    pub fn violations(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.margin < -self.tolerance)
    }
}

/// Margin G^{2n,2m} for every stored even-even moment.
pub fn check_even_even(state: &MomentSet) -> Vec<Constraint> {
    state
        .keys()
        .filter(|k| k.is_even_even())
        .map(|k| Constraint { id: format!("even_even_{}_{}", k.a, k.b), margin: state.get(k.a, k.b), worst_eigenvalue: None })
        .collect()
}

/// G^{2,0}G^{0,2} − (G^{1,1})² − ħ²/4.
pub fn check_heisenberg(state: &MomentSet) -> Constraint {
    let h = state.hbar;
    Constraint {
        id: "heisenberg".into(),
        margin: state.get(2, 0) * state.get(0, 2) - state.get(1, 1).powi(2) - h * h / 4.0,
        worst_eigenvalue: None,
    }
}

#[derive(Debug, Clone)]
pub struct MomentMatrix {
    pub basis: Vec<MomentKey>,
    pub matrix: DMatrix<Complex64>,
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue.
    pub margin: f64,
    /// 10⁻¹⁰ × largest diagonal entry.
    pub tolerance: f64,
}

impl MomentMatrix {
    pub fn is_psd(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

/// Basis of Weyl monomials with a+b ≤ r, by degree and then with δq first.
pub fn matrix_basis(r: usize) -> Vec<MomentKey> {
    (0..=r).flat_map(|n| (0..=n).map(move |a| MomentKey::new(a, n - a))).collect()
}

pub fn moment_matrix(state: &MomentSet, r: usize) -> Result<MomentMatrix> {
    moment_matrix_scaled(state, r, 1.0)
}

/// Gram matrix of s^{a+b} W_{a,b}; entries are expectations of star products
/// (plain products for classical states).
pub fn moment_matrix_scaled(state: &MomentSet, r: usize, s: f64) -> Result<MomentMatrix> {
    if 2 * r > state.n_max {
        return Err(Error::DegreeOverflow { degree: 2 * r, n_max: state.n_max });
    }
    let basis = matrix_basis(r);
    let n = basis.len();
    let mono: Vec<WeylPolynomial> = basis
        .iter()
        .map(|k| WeylPolynomial::monomial(k.a, k.b, Complex64::new(s.powi(k.order() as i32), 0.0)))
        .collect();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let prod = match state.flavor {
                Flavor::Quantum => mono[i].conj().star_with(&mono[j], &Complex64::new(state.hbar, 0.0)),
                Flavor::Classical => mono[i].conj().product(&mono[j]),
            };
            m[(i, j)] = prod.expectation(state)?;
        }
    }
    let eig = m.clone().symmetric_eigenvalues();
    let mut eigenvalues: Vec<f64> = eig.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let max_diag = (0..n).map(|i| m[(i, i)].re).fold(0.0, f64::max);
    Ok(MomentMatrix {
        basis,
        matrix: m,
        margin: eigenvalues[0],
        eigenvalues,
        tolerance: 1e-10 * max_diag,
    })
}

/// Operator word in δq̂ ('q') and δp̂ ('p'), applied left to right.
fn word_symbol(word: &str) -> WeylPolynomial<HbarSeries> {
    let mut s = WeylPolynomial::<HbarSeries>::one();
    let h = HbarSeries::hbar();
    for ch in word.chars() {
        let letter = if ch == 'q' { WeylPolynomial::delta_q() } else { WeylPolynomial::delta_p() };
        s = s.star_with(&letter, &h);
    }
    s
}

fn words_up_to(len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..len {
        layer = layer
            .iter()
            .flat_map(|w| ["q", "p"].iter().map(move |c| format!("{w}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Linear functional G ↦ Σ c_{a,b} G^{a,b} with coefficients fixed at one ħ.
#[derive(Debug, Clone)]
struct Functional {
    terms: Vec<(MomentKey, Complex64)>,
}

impl Functional {
    fn new(p: &WeylPolynomial<HbarSeries>, hbar: f64) -> Self {
        let terms = p
            .terms()
            .map(|(&(a, b), c)| (MomentKey::new(a, b), c.at(hbar)))
            .filter(|(_, c)| c.norm() != 0.0)
            .collect();
        Self { terms }
    }

    fn eval(&self, s: &MomentSet) -> Complex64 {
        self.terms.iter().map(|(k, c)| c * s.get(k.a, k.b)).sum()
    }
}

#[derive(Debug, Clone)]
struct Pair {
    id: String,
    aa: Functional,
    bb: Functional,
    ab: Functional,
}

/// Pairwise Cauchy–Schwarz constraints over all words of length ≤ r; uses
/// moments up to order 2r.
#[derive(Debug, Clone)]
pub struct SchwarzSuite {
    pub half_order: usize,
    pub hbar: f64,
    pairs: Vec<Pair>,
    diagonals: Vec<(String, Functional)>,
}

impl SchwarzSuite {
    pub fn new(half_order: usize, hbar: f64) -> Result<Self> {
        if half_order == 0 {
            return Err(Error::InvalidArgument("suite of half order 0".into()));
        }
        let words = words_up_to(half_order);
        let syms: Vec<_> = words.iter().map(|w| word_symbol(w)).collect();
        let h = HbarSeries::hbar();
        let gram = |i: usize, j: usize| syms[i].conj().star_with(&syms[j], &h);
        let diag: Vec<Functional> = (0..words.len()).map(|i| Functional::new(&gram(i, i), hbar)).collect();
        let mut pairs = Vec::new();
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                pairs.push(Pair {
                    id: format!("schwarz_{}_{}", words[i], words[j]),
                    aa: diag[i].clone(),
                    bb: diag[j].clone(),
                    ab: Functional::new(&gram(i, j), hbar),
                });
            }
        }
        let diagonals = words.iter().zip(diag).map(|(w, f)| (format!("norm_{w}"), f)).collect();
        Ok(Self { half_order, hbar, pairs, diagonals })
    }

    pub fn order(&self) -> usize {
        2 * self.half_order
    }

    pub fn len(&self) -> usize {
        self.pairs.len() + self.diagonals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Margins are the smallest eigenvalue of each 2×2 principal minor
    /// [[⟨A†A⟩, ⟨A†B⟩], [⟨B†A⟩, ⟨B†B⟩]] of the Gram matrix (and the norms
    /// ⟨A†A⟩ themselves), divided by the largest norm in the suite; the
    /// tolerance is 10⁻¹⁰ on that scale.
    pub fn check(&self, state: &MomentSet) -> Result<InequalityReport> {
        if self.order() > state.n_max {
            return Err(Error::DegreeOverflow { degree: self.order(), n_max: state.n_max });
        }
        let mut constraints = Vec::with_capacity(self.len());
        let norms: Vec<f64> = self.diagonals.iter().map(|(_, f)| f.eval(state).re).collect();
        let scale = norms.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for ((id, _), n) in self.diagonals.iter().zip(&norms) {
            constraints.push(Constraint { id: id.clone(), margin: n / scale, worst_eigenvalue: None });
        }
        for p in &self.pairs {
            let a = p.aa.eval(state).re;
            let b = p.bb.eval(state).re;
            let c = p.ab.eval(state).norm_sqr();
            let lmin = 0.5 * (a + b) - (0.25 * (a - b).powi(2) + c).sqrt();
            constraints.push(Constraint { id: p.id.clone(), margin: lmin / scale, worst_eigenvalue: Some(lmin) });
        }
        Ok(InequalityReport { constraints, tolerance: 1e-10 })
    }
}

/// Even-even positivity, Heisenberg and the Schwarz suite of the given half
/// order in one report.
pub fn check_all(state: &MomentSet, suite: Option<&SchwarzSuite>) -> Result<InequalityReport> {
    let scale = state
        .keys()
        .filter(|k| k.is_even_even())
        .map(|k| state.get(k.a, k.b).abs())
        .fold(0.0, f64::max);
    let mut constraints = check_even_even(state);
    let h = check_heisenberg(state);
    let hscale = (state.get(2, 0) * state.get(0, 2)).abs().max(state.hbar * state.hbar / 4.0).max(f64::MIN_POSITIVE);
    constraints.push(Constraint { margin: h.margin / hscale, ..h });
    for c in constraints.iter_mut().filter(|c| c.id.starts_with("even_even")) {
        c.margin /= scale.max(f64::MIN_POSITIVE);
    }
    if let Some(s) = suite {
        constraints.extend(s.check(state)?.constraints);
    }
    Ok(InequalityReport { constraints, tolerance: 1e-10 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorEntry {
    pub half_order: usize,
    pub order: usize,
    pub first_violation: Option<f64>,
    pub first_violation_periods: Option<f64>,
    pub constraint: Option<String>,
}

/// Earliest time each suite is violated along a trajectory.
pub fn monitor(traj: &Trajectory, half_orders: &[usize], period: f64) -> Result<Vec<MonitorEntry>> {
    let Some(first) = traj.states.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for &r in half_orders {
        let suite = SchwarzSuite::new(r, first.hbar)?;
        let mut entry = MonitorEntry {
            half_order: r,
            order: 2 * r,
            first_violation: None,
            first_violation_periods: None,
            constraint: None,
        };
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let rep = suite.check(s)?;
            if let Some(c) = rep.violations().min_by(|a, b| a.margin.total_cmp(&b.margin)) {
                entry.first_violation = Some(*t);
                entry.first_violation_periods = Some(t / period);
                entry.constraint = Some(c.id.clone());
                break;
            }
        }
        out.push(entry);
    }
    Ok(out)
}

/// Worst margin of each suite at every sample: rows of (t, constraint id, margin).
pub fn margin_series(traj: &Trajectory, half_orders: &[usize]) -> Result<Vec<(f64, String, f64)>> {
    let Some(first) = traj.states.first() else {
        return Ok(Vec::new());
    };
    let suites: Vec<SchwarzSuite> =
        half_orders.iter().map(|&r| SchwarzSuite::new(r, first.hbar)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let h = check_heisenberg(s);
        rows.push((*t, h.id, h.margin));
        for suite in &suites {
            let rep = suite.check(s)?;
            if let Some(w) = rep.worst() {
                rows.push((*t, format!("order{}:{}", suite.order(), w.id), w.margin));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::gaussian_moments;

    #[test]
    fn first_order_matrix() {
        let h = 0.2;
        let mut s = gaussian_moments(0.3, h, 4).unwrap();
        s.set(1, 1, 0.01);
        let m = moment_matrix(&s, 1).unwrap();
        assert_eq!(m.basis, vec![MomentKey::new(0, 0), MomentKey::new(0, 1), MomentKey::new(1, 0)]);
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(m.matrix[(0, 0)], c(1.0, 0.0));
        assert_eq!(m.matrix[(0, 1)], c(0.0, 0.0));
        assert_eq!(m.matrix[(1, 1)], c(s.get(0, 2), 0.0));
        assert!((m.matrix[(1, 2)] - c(0.01, h / 2.0)).norm() < 1e-17);
        assert!((m.matrix[(2, 1)] - c(0.01, -h / 2.0)).norm() < 1e-17);
        assert_eq!(m.matrix[(2, 2)], c(s.get(2, 0), 0.0));
    }

    #[test]
    fn gaussian_saturates_heisenberg() {
        let h = 0.01;
        let s = gaussian_moments(h, h, 8).unwrap();
        assert!(check_heisenberg(&s).margin.abs() < 1e-20);
        let m = moment_matrix(&s, 1).unwrap();
        assert!(m.is_psd());
        assert!(m.margin.abs() < 1e-15);
        let cl = s.to_classical();
        let m = moment_matrix(&cl, 1).unwrap();
        let mut e = m.eigenvalues.clone();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - h / 2.0).abs() < 1e-15 && (e[1] - h / 2.0).abs() < 1e-15 && (e[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn even_even_violation_detected() {
        let mut s = gaussian_moments(0.5, 0.5, 4).unwrap();
        s.set(2, 2, -1e-3);
        let bad: Vec<_> = check_even_even(&s).into_iter().filter(|c| c.margin < 0.0).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].id, "even_even_2_2");
    }

    #[test]
    fn classical_delta_passes() {
        let s = MomentSet::zeros(Flavor::Classical, 0.0, 4).unwrap();
        assert_eq!(check_heisenberg(&s).margin, 0.0);
        assert!(SchwarzSuite::new(2, 0.0).unwrap().check(&s).unwrap().passed());
    }

    #[test]
    fn schwarz_first_order_is_heisenberg() {
        let h = 0.3;
        let mut s = gaussian_moments(0.4, h, 2).unwrap();
        let suite = SchwarzSuite::new(1, h).unwrap();
        assert!(suite.check(&s).unwrap().passed());
        s.set(0, 2, s.get(0, 2) * 0.9);
        let rep = suite.check(&s).unwrap();
        assert_eq!(rep.violations().next().unwrap().id, "schwarz_q_p");
    }

    #[test]
    fn words_enumerated() {
        assert_eq!(words_up_to(2), vec!["q", "p", "qq", "qp", "pq", "pp"]);
        assert_eq!(SchwarzSuite::new(4, 0.1).unwrap().len(), 30 + 30 * 29 / 2);
    }
}
