use std::collections::BTreeMap;

use num_complex::Complex64;

use super::scalar::WeylScalar;
use crate::combinatorics::{binomial, factorial, falling};
use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::symbolic::Rational;

/// Linear combination of Weyl-ordered monomials; key `(a, b)` is the
/// symmetrized product of `a` factors δp and `b` factors δq.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylPolynomial<C: WeylScalar = Complex64> {
    terms: BTreeMap<(usize, usize), C>,
}

impl<C: WeylScalar> Default for WeylPolynomial<C> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<C: WeylScalar> WeylPolynomial<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn monomial(a: usize, b: usize, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn delta_p() -> Self {
        Self::monomial(1, 0, C::one())
    }

    pub fn delta_q() -> Self {
        Self::monomial(0, 1, C::one())
    }

    pub fn add_term(&mut self, a: usize, b: usize, c: C) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((a, b)).or_insert_with(C::zero);
        *e = e.clone() + c;
        if e.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: usize, b: usize) -> C {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(k, c)| (*k, c.conj())).collect() }
    }

    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.conj() == *c)
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Self::zero();
        for (&(a, b), c) in &self.terms {
            out.add_term(a, b, c.clone() * s.clone());
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, b), c) in &other.terms {
            out.add_term(a, b, c.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(a, b), c) in &other.terms {
            out.add_term(a, b, -c.clone());
        }
        out
    }

    /// Pointwise (commutative) product of symbols.
    pub fn product(&self, other: &Self) -> Self {
        self.bidifferential(other, 0)
    }

    /// B_m(f,g) = Σ_j C(m,j)(-1)^j (∂_Q^{m-j}∂_P^j f)(∂_P^{m-j}∂_Q^j g).
    fn bidifferential(&self, other: &Self, m: usize) -> Self {
        let mut out = Self::zero();
        for (&(a, b), cf) in &self.terms {
            for (&(c, d), cg) in &other.terms {
                if a + c < m || b + d < m {
                    continue;
                }
                let mut k: i128 = 0;
                for j in 0..=m {
                    let x = [falling(b, m - j), falling(c, m - j), falling(d, j), binomial(m, j)]
                        .iter()
                        .try_fold(falling(a, j), |acc, &f| acc.checked_mul(f))
                        .expect("bidifferential coefficient overflow");
                    if x == 0 {
                        continue;
                    }
                    let x = i128::try_from(x).expect("bidifferential coefficient overflow");
                    k += if j % 2 == 0 { x } else { -x };
                }
                if k != 0 {
                    out.add_term(a + c - m, b + d - m, cf.clone() * cg.clone() * C::from_int(k));
                }
            }
        }
        out
    }

    fn max_bidiff_order(&self, other: &Self) -> usize {
        self.degree().min(other.degree())
    }

    /// Groenewold expansion with deformation iħ/2; the series terminates for
    /// polynomials. `hbar` is an element of the coefficient ring.
    pub fn star_with(&self, other: &Self, hbar: &C) -> Self {
        let d = C::imag_unit() * hbar.clone() * C::from_rational(Rational::new(1, 2));
        let mut out = Self::zero();
        let mut dm = C::one();
        for m in 0..=self.max_bidiff_order(other) {
            if m > 0 {
                dm = dm * d.clone();
            }
            let w = dm.clone() * C::from_rational(Rational::new(1, factorial(m) as i128));
            out = out.plus(&self.bidifferential(other, m).scale(&w));
        }
        out
    }

    /// (f⋆g − g⋆f)/(iħ), evaluated term by term so that no division by ħ is
    /// needed: Σ_{m odd} (−1)^{(m−1)/2} (ħ/2)^{m−1}/m! B_m(f,g).
    pub fn moyal_with(&self, other: &Self, hbar: &C) -> Self {
        let h2 = hbar.clone() * hbar.clone() * C::from_rational(Rational::new(-1, 4));
        let mut out = Self::zero();
        let mut w = C::one();
        let top = self.max_bidiff_order(other);
        let mut m = 1;
        while m <= top {
            let c = w.clone() * C::from_rational(Rational::new(1, factorial(m) as i128));
            out = out.plus(&self.bidifferential(other, m).scale(&c));
            w = w * h2.clone();
            m += 2;
        }
        out
    }

    /// ∂_Q f ∂_P g − ∂_P f ∂_Q g.
    pub fn poisson(&self, other: &Self) -> Self {
        self.bidifferential(other, 1)
    }
}

impl WeylPolynomial<Complex64> {
    /// Complex-valued linear functional monomial (a,b) ↦ G^{a,b}.
    pub fn expectation(&self, state: &MomentSet) -> Result<Complex64> {
        let deg = self.degree();
        if deg > state.n_max {
            return Err(Error::DegreeOverflow { degree: deg, n_max: state.n_max });
        }
        Ok(self.terms.iter().map(|(&(a, b), c)| c * state.get(a, b)).sum())
    }
}

pub fn star_product(p: &WeylPolynomial, q: &WeylPolynomial, hbar: f64) -> WeylPolynomial {
    p.star_with(q, &Complex64::new(hbar, 0.0))
}

pub fn moyal_bracket(p: &WeylPolynomial, q: &WeylPolynomial, hbar: f64) -> Result<WeylPolynomial> {
    if !(hbar > 0.0) {
        return Err(Error::ZeroHbar);
    }
    Ok(p.moyal_with(q, &Complex64::new(hbar, 0.0)))
}

pub fn poisson_bracket(p: &WeylPolynomial, q: &WeylPolynomial) -> WeylPolynomial {
    p.poisson(q)
}

pub fn expectation(p: &WeylPolynomial, state: &MomentSet) -> Result<Complex64> {
    p.expectation(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{gaussian_moments, Flavor};
    use crate::weyl::scalar::HbarSeries;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn canonical_pair() {
        let h = 0.3;
        let qp = star_product(&WeylPolynomial::delta_q(), &WeylPolynomial::delta_p(), h);
        assert_eq!(qp.coefficient(1, 1), c(1.0, 0.0));
        assert_eq!(qp.coefficient(0, 0), c(0.0, h / 2.0));
        let br = moyal_bracket(&WeylPolynomial::delta_q(), &WeylPolynomial::delta_p(), h).unwrap();
        assert_eq!(br, WeylPolynomial::one());
        assert_eq!(poisson_bracket(&WeylPolynomial::delta_q(), &WeylPolynomial::delta_p()), WeylPolynomial::one());
        assert!(moyal_bracket(&WeylPolynomial::delta_q(), &WeylPolynomial::delta_p(), 0.0).is_err());
    }

    #[test]
    fn unit_and_self_bracket() {
        let p = WeylPolynomial::monomial(2, 3, c(1.5, 0.0)).plus(&WeylPolynomial::monomial(0, 1, c(-2.0, 0.0)));
        assert_eq!(star_product(&p, &WeylPolynomial::one(), 0.7), p);
        assert_eq!(star_product(&WeylPolynomial::one(), &p, 0.7), p);
        assert!(poisson_bracket(&p, &p).is_zero());
    }

    #[test]
    fn poisson_against_kinetic() {
        // {δp δq, δp²/2} = δp²
        let w = WeylPolynomial::monomial(1, 1, c(1.0, 0.0));
        let k = WeylPolynomial::monomial(2, 0, c(0.5, 0.0));
        assert_eq!(poisson_bracket(&w, &k), WeylPolynomial::monomial(2, 0, c(1.0, 0.0)));
    }

    #[test]
    fn cubic_quartic_bracket_carries_hbar_squared() {
        // {δp³, δq⁴}_M = −12 δp² δq³ + 6ħ² δq
        let f = WeylPolynomial::<HbarSeries>::monomial(3, 0, HbarSeries::one());
        let g = WeylPolynomial::<HbarSeries>::monomial(0, 4, HbarSeries::one());
        let br = f.moyal_with(&g, &HbarSeries::hbar());
        let lead = br.coefficient(2, 3);
        assert_eq!(lead, HbarSeries::from_int(-12));
        let sub = br.coefficient(0, 1);
        assert_eq!(sub.coeffs().len(), 3);
        assert_eq!(sub.coeffs()[2].re, Rational::from_integer(6));
    }

    #[test]
    fn expectation_of_star() {
        let h = 0.01;
        let mut s = gaussian_moments(h, h, 4).unwrap();
        s.set(1, 1, 0.002);
        let e = expectation(&star_product(&WeylPolynomial::delta_q(), &WeylPolynomial::delta_p(), h), &s).unwrap();
        assert!((e - c(0.002, h / 2.0)).norm() < 1e-18);
        assert_eq!(expectation(&WeylPolynomial::one(), &s).unwrap(), c(1.0, 0.0));
        let big = WeylPolynomial::monomial(3, 2, c(1.0, 0.0));
        assert!(matches!(expectation(&big, &s), Err(Error::DegreeOverflow { .. })));
        assert_eq!(s.flavor, Flavor::Quantum);
    }
}
