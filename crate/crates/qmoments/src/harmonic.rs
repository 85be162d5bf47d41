//! Closed forms for quadratic potentials V = βq + ω²q²/2.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::combinatorics::{binomial, factorial};
use crate::error::{Error, Result};
use crate::inequalities::{check_even_even, check_heisenberg};
use crate::moments::{keys, Flavor, MomentSet};
use crate::potential::PolynomialPotential;
use crate::symbolic::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicSpec {
    pub beta: f64,
    pub omega_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicKind {
    Free,
    UniformForce,
    Oscillator,
    InverseOscillator,
}

impl HarmonicSpec {
    pub fn from_potential(v: &PolynomialPotential) -> Result<Self> {
        if !v.is_quadratic() {
            return Err(Error::InvalidArgument(format!("degree {} potential is not harmonic", v.degree())));
        }
        Ok(Self { beta: v.beta(), omega_sq: v.omega_sq() })
    }

    pub fn potential(&self) -> PolynomialPotential {
        PolynomialPotential::harmonic(self.beta, self.omega_sq)
    }

    pub fn kind(&self) -> HarmonicKind {
        if self.omega_sq > 0.0 {
            HarmonicKind::Oscillator
        } else if self.omega_sq < 0.0 {
            HarmonicKind::InverseOscillator
        } else if self.beta != 0.0 {
            HarmonicKind::UniformForce
        } else {
            HarmonicKind::Free
        }
    }
}

/// Exact evolution for ω² = 0: G^{a,b}(t) = Σ_n C(b,n) t^{b−n} G^{a+b−n,n}(0);
/// the centroid follows q = q₀ + p₀t − βt²/2, p = p₀ − βt.
pub fn linear_evolution(initial: &MomentSet, spec: &HarmonicSpec, t: f64) -> Result<MomentSet> {
    if spec.omega_sq != 0.0 {
        return Err(Error::InvalidArgument("linear evolution needs ω² = 0".into()));
    }
    let mut out = initial.clone();
    out.q = initial.q + initial.p * t - spec.beta * t * t / 2.0;
    out.p = initial.p - spec.beta * t;
    for k in keys(initial.n_max) {
        let mut acc = 0.0;
        for n in 0..=k.b {
            acc += binomial(k.b, n) as f64 * t.powi((k.b - n) as i32) * initial.get(k.a + k.b - n, n);
        }
        out.set(k.a, k.b, acc);
    }
    Ok(out)
}

/// Polynomial Σ c_{ij} x^i y^j with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BiPoly {
    pub terms: BTreeMap<(u32, u32), Rational>,
}

impl BiPoly {
    fn add(&mut self, i: u32, j: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((i, j)).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&(i, j));
        }
    }

    pub fn coefficient(&self, i: u32, j: u32) -> Rational {
        self.terms.get(&(i, j)).copied().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c.to_f64().unwrap_or(f64::NAN) * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    pub fn y_degree(&self) -> u32 {
        self.terms.keys().map(|(_, j)| *j).max().unwrap_or(0)
    }
}

/// Stationary G^{0,n} of the oscillator as exact polynomials in
/// x = E/ω² and y = (ħ/ω)², for n = 0..=n_max:
/// G^{0,k+2} = [2(k+1) x G^{0,k} + (k+1)k(k−1) y G^{0,k−2}/4] / (k+2).
pub fn position_moment_polynomials(n_max: usize) -> Vec<BiPoly> {
    let mut g = vec![BiPoly::default(); n_max + 1];
    g[0].add(0, 0, Rational::from_integer(1));
    for k in 0..n_max.saturating_sub(1) {
        let kk = k as i128;
        let mut next = BiPoly::default();
        for (&(i, j), c) in &g[k].terms {
            next.add(i + 1, j, *c * Rational::new(2 * (kk + 1), kk + 2));
        }
        if k >= 2 {
            for (&(i, j), c) in &g[k - 2].terms {
                next.add(i, j + 1, *c * Rational::new((kk + 1) * kk * (kk - 1), 4 * (kk + 2)));
            }
        }
        g[k + 2] = next;
    }
    g
}

fn mixed_factor(a: usize, b: usize) -> f64 {
    // G^{2a,2b} = (2a)!(2b)!/(2(a+b))! · (a+b)!/(a!b!) · ω^{2a} G^{0,2(a+b)}
    let r = Rational::new(
        (factorial(2 * a) * factorial(2 * b)) as i128,
        factorial(2 * (a + b)) as i128,
    ) * Rational::from_integer(binomial(a + b, a) as i128);
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn harmonic_stationary_quantum(e: f64, omega: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    if !(e > 0.0) || !(omega > 0.0) || hbar < 0.0 {
        return Err(Error::InvalidArgument(format!("E={e}, ω={omega}, ħ={hbar}")));
    }
    let x = e / (omega * omega);
    let y = (hbar / omega).powi(2);
    let pos = position_moment_polynomials(n_max);
    let mut s = MomentSet::zeros(Flavor::Quantum, hbar, n_max)?;
    for k in keys(n_max).filter(|k| k.is_even_even()) {
        let (a, b) = (k.a / 2, k.b / 2);
        let g0 = pos[k.order()].eval(x, y);
        s.set(k.a, k.b, mixed_factor(a, b) * omega.powi(2 * a as i32) * g0);
    }
    Ok(s)
}

pub fn harmonic_stationary_classical(e: f64, omega: f64, n_max: usize) -> Result<MomentSet> {
    if e < 0.0 || !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("E={e}, ω={omega}")));
    }
    let mut s = MomentSet::zeros(Flavor::Classical, 0.0, n_max)?;
    for k in keys(n_max).filter(|k| k.is_even_even()) {
        let (a, b) = (k.a / 2, k.b / 2);
        let c = Rational::new(
            (factorial(k.a) * factorial(k.b)) as i128,
            (factorial(a) * factorial(b) * factorial(a + b)) as i128,
        )
        .to_f64()
        .unwrap_or(f64::NAN);
        let v = c * e.powi((a + b) as i32) / (2f64.powi((a + b) as i32) * omega.powi(2 * b as i32));
        s.set(k.a, k.b, v);
    }
    Ok(s)
}

/// ħω(n + 1/2).
pub fn energy_level(n: usize, omega: f64, hbar: f64) -> f64 {
    hbar * omega * (n as f64 + 0.5)
}

/// The stationary formulas at the ground-state energy ħω/2.
pub fn ground_state_check(omega: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    if !(omega > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("ω={omega}, ħ={hbar}")));
    }
    harmonic_stationary_quantum(energy_level(0, omega, hbar), omega, hbar, n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstruction {
    /// The centroid is accelerated, dp/dt = −β ≠ 0.
    UniformForce,
    /// Stationarity forces G^{2,0} = 0.
    Heisenberg,
    /// The would-be stationary moments have negative even-even entries.
    EvenEvenNegativity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub exists: bool,
    pub reason: Option<Obstruction>,
}

/// Moments the oscillator formulas would assign for ω² < 0 (with ω² kept
/// signed); used to exhibit the obstruction.
pub fn inverse_oscillator_candidate(e: f64, omega_sq: f64, hbar: f64, n_max: usize) -> Result<MomentSet> {
    let x = e / omega_sq;
    let y = hbar * hbar / omega_sq;
    let pos = position_moment_polynomials(n_max);
    let flavor = if hbar == 0.0 { Flavor::Classical } else { Flavor::Quantum };
    let mut s = MomentSet::zeros(flavor, hbar, n_max)?;
    for k in keys(n_max).filter(|k| k.is_even_even()) {
        let (a, b) = (k.a / 2, k.b / 2);
        s.set(k.a, k.b, mixed_factor(a, b) * omega_sq.powi(a as i32) * pos[k.order()].eval(x, y));
    }
    Ok(s)
}

pub fn stationary_exists(spec: &HarmonicSpec, flavor: Flavor) -> Verdict {
    let no = |r| Verdict { exists: false, reason: Some(r) };
    match spec.kind() {
        HarmonicKind::UniformForce => no(Obstruction::UniformForce),
        HarmonicKind::Oscillator => Verdict { exists: true, reason: None },
        HarmonicKind::Free => {
            // dG^{1,1}/dt = G^{2,0} must vanish; then only the classical case survives
            let mut s = MomentSet::zeros(flavor, if flavor == Flavor::Quantum { 1.0 } else { 0.0 }, 2)
                .expect("valid cutoff");
            s.set(0, 2, 1.0);
            if check_heisenberg(&s).margin < 0.0 {
                no(Obstruction::Heisenberg)
            } else {
                Verdict { exists: true, reason: None }
            }
        }
        HarmonicKind::InverseOscillator => {
            let hbar = if flavor == Flavor::Quantum { 1.0 } else { 0.0 };
            let s = inverse_oscillator_candidate(1.0, spec.omega_sq, hbar, 4).expect("valid cutoff");
            if check_even_even(&s).iter().any(|c| c.margin < 0.0) {
                no(Obstruction::EvenEvenNegativity)
            } else {
                Verdict { exists: true, reason: None }
            }
        }
    }
}
