//! Exact symbolic form of hierarchy equations.
//!
//! A right-hand side is a sum of terms
//! `coeff · λ_k · q^i · p^j · ħ^h · G^{a1,b1} · G^{a2,b2}` where `λ_k` is one
//! coefficient of the potential (kept symbolic so the comparison between the
//! hand-coded and derived equations is independent of its numeric value).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::moments::{slot, MomentKey, MomentSet};
use crate::potential::PolynomialPotential;

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Target {
    Q,
    P,
    Moment(MomentKey),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    /// Power k of the potential coefficient λ_k multiplying the term, if any.
    pub lambda: Option<usize>,
    pub q_pow: u32,
    pub p_pow: u32,
    pub hbar_pow: u32,
    /// Moment factors of order ≥ 2, sorted.
    pub factors: Vec<MomentKey>,
}

/// A canonical sum of terms: merged, zero-free, deterministically ordered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Rational>,
}

impl Expr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_monomial(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Adds a term after applying the truncation rule: any factor with a
    /// negative index or order above `n_max` kills the term, order 0 is 1 and
    /// order 1 is 0.
    #[allow(clippy::too_many_arguments)]
    pub fn add(
        &mut self,
        c: Rational,
        lambda: Option<usize>,
        q_pow: u32,
        p_pow: u32,
        hbar_pow: u32,
        factors: &[(isize, isize)],
        n_max: usize,
    ) {
        if c.is_zero() {
            return;
        }
        let mut keys = Vec::with_capacity(factors.len());
        for &(a, b) in factors {
            if a < 0 || b < 0 {
                return;
            }
            let k = MomentKey::new(a as usize, b as usize);
            match k.order() {
                0 => {}
                1 => return,
                n if n > n_max => return,
                _ => keys.push(k),
            }
        }
        keys.sort();
        self.add_monomial(Monomial { lambda, q_pow, p_pow, hbar_pow, factors: keys }, c);
    }

    pub fn scaled(&self, c: Rational) -> Expr {
        let mut out = Expr::new();
        for (m, v) in &self.terms {
            out.add_monomial(m.clone(), *v * c);
        }
        out
    }

    pub fn add_expr(&mut self, other: &Expr) {
        for (m, v) in &other.terms {
            self.add_monomial(m.clone(), *v);
        }
    }

    /// Multiplies every term by one more moment factor, truncating.
    pub fn times_moment(&self, a: isize, b: isize, n_max: usize) -> Expr {
        let mut out = Expr::new();
        for (m, v) in &self.terms {
            let mut f: Vec<(isize, isize)> =
                m.factors.iter().map(|k| (k.a as isize, k.b as isize)).collect();
            f.push((a, b));
            out.add(*v, m.lambda, m.q_pow, m.p_pow, m.hbar_pow, &f, n_max);
        }
        out
    }

    pub fn contains_hbar(&self) -> bool {
        self.terms.keys().any(|m| m.hbar_pow > 0)
    }

    /// Orders of all referenced moment factors.
    pub fn referenced_orders(&self) -> std::collections::BTreeSet<usize> {
        self.terms.keys().flat_map(|m| m.factors.iter().map(|k| k.order())).collect()
    }

    /// Numeric value for a potential and state.
    pub fn evaluate(&self, v: &PolynomialPotential, state: &MomentSet) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut x = c.to_f64().unwrap_or(f64::NAN);
                if let Some(k) = m.lambda {
                    x *= v.coefficient(k);
                }
                x *= state.q.powi(m.q_pow as i32) * state.p.powi(m.p_pow as i32);
                x *= state.hbar.powi(m.hbar_pow as i32);
                for f in &m.factors {
                    x *= state.get(f.a, f.b);
                }
                x
            })
            .sum()
    }

    /// Drops every term carrying a power of ħ.
    pub fn without_hbar(&self) -> Expr {
        Expr { terms: self.terms.iter().filter(|(m, _)| m.hbar_pow == 0).map(|(m, v)| (m.clone(), *v)).collect() }
    }
}

/// A full truncated system: one expression per target.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct System {
    pub n_max: usize,
    pub equations: BTreeMap<Target, Expr>,
}

#[derive(Serialize)]
struct TermJson {
    coeff: String,
    lambda_power: Option<usize>,
    q_power: u32,
    p_power: u32,
    hbar_power: u32,
    factors: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct EquationJson {
    target: String,
    terms: Vec<TermJson>,
}

fn target_name(t: &Target) -> String {
    match t {
        Target::Q => "q".into(),
        Target::P => "p".into(),
        Target::Moment(k) => format!("({},{})", k.a, k.b),
    }
}

impl System {
    /// Interchange dump of the compiled hierarchy.
    pub fn to_json(&self) -> String {
        let eqs: Vec<EquationJson> = self
            .equations
            .iter()
            .map(|(t, e)| EquationJson {
                target: target_name(t),
                terms: e
                    .terms()
                    .map(|(m, c)| TermJson {
                        coeff: c.to_string(),
                        lambda_power: m.lambda,
                        q_power: m.q_pow,
                        p_power: m.p_pow,
                        hbar_power: m.hbar_pow,
                        factors: m.factors.iter().map(|k| (k.a, k.b)).collect(),
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&eqs).expect("serializable")
    }
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct FlatTerm {
    c: f64,
    q_pow: u32,
    p_pow: u32,
    f1: u32,
    f2: u32,
}

/// Float form of a [`System`] with λ and ħ folded into the coefficients;
/// evaluation touches only flat arrays.
#[derive(Debug, Clone)]
pub struct FlatSystem {
    n_max: usize,
    max_q_pow: usize,
    max_p_pow: usize,
    // term ranges per output slot: 0 = q, 1 = p, then moments in storage order
    starts: Vec<usize>,
    terms: Vec<FlatTerm>,
}

impl FlatSystem {
    pub fn compile(sys: &System, v: &PolynomialPotential, hbar: f64) -> Self {
        let n = crate::moments::moment_count(sys.n_max);
        let mut per_slot: Vec<Vec<FlatTerm>> = vec![Vec::new(); n + 2];
        let (mut max_q, mut max_p) = (0usize, 0usize);
        for (t, e) in &sys.equations {
            let s = match t {
                Target::Q => 0,
                Target::P => 1,
                Target::Moment(k) => 2 + slot(k.a, k.b),
            };
            for (m, c) in e.terms() {
                let mut x = c.to_f64().unwrap_or(f64::NAN);
                if let Some(k) = m.lambda {
                    x *= v.coefficient(k);
                }
                x *= hbar.powi(m.hbar_pow as i32);
                if x == 0.0 {
                    continue;
                }
                let f = |i: usize| m.factors.get(i).map_or(NONE, |k| slot(k.a, k.b) as u32);
                assert!(m.factors.len() <= 2, "at most quadratic terms");
                max_q = max_q.max(m.q_pow as usize);
                max_p = max_p.max(m.p_pow as usize);
                per_slot[s].push(FlatTerm { c: x, q_pow: m.q_pow, p_pow: m.p_pow, f1: f(0), f2: f(1) });
            }
        }
        let mut starts = Vec::with_capacity(n + 3);
        let mut terms = Vec::new();
        for list in per_slot {
            starts.push(terms.len());
            terms.extend(list);
        }
        starts.push(terms.len());
        Self { n_max: sys.n_max, max_q_pow: max_q, max_p_pow: max_p, starts, terms }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// `y = [q, p, moments...]`, writes the time derivative into `dy`.
    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        const MAXP: usize = 40;
        debug_assert!(self.max_q_pow < MAXP && self.max_p_pow < MAXP);
        let mut qp = [1.0f64; MAXP];
        let mut pp = [1.0f64; MAXP];
        for i in 1..=self.max_q_pow {
            qp[i] = qp[i - 1] * y[0];
        }
        for i in 1..=self.max_p_pow {
            pp[i] = pp[i - 1] * y[1];
        }
        let g = &y[2..];
        for s in 0..self.starts.len() - 1 {
            let mut acc = 0.0;
            for t in &self.terms[self.starts[s]..self.starts[s + 1]] {
                let mut x = t.c * qp[t.q_pow as usize] * pp[t.p_pow as usize];
                if t.f1 != NONE {
                    x *= g[t.f1 as usize];
                }
                if t.f2 != NONE {
                    x *= g[t.f2 as usize];
                }
                acc += x;
            }
            dy[s] = acc;
        }
    }
}

pub fn rational(n: i128, d: i128) -> Rational {
    Ratio::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rules() {
        let mut e = Expr::new();
        e.add(rational(1, 1), None, 0, 0, 0, &[(0, 0)], 4); // constant
        e.add(rational(1, 1), None, 0, 0, 0, &[(1, 0)], 4); // zero
        e.add(rational(1, 1), None, 0, 0, 0, &[(3, 2)], 4); // above cutoff
        e.add(rational(1, 1), None, 0, 0, 0, &[(-1, 3)], 4); // negative index
        e.add(rational(2, 1), None, 0, 0, 0, &[(2, 0), (0, 2)], 4);
        e.add(rational(-2, 1), None, 0, 0, 0, &[(0, 2), (2, 0)], 4);
        assert_eq!(e.len(), 1);
        let (m, c) = e.terms().next().unwrap();
        assert!(m.factors.is_empty());
        assert_eq!(*c, rational(1, 1));
    }
}
