//! Equations of motion obtained mechanically from brackets of Weyl symbols
//! with the Hamiltonian expanded about the centroid.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::poly::WeylPolynomial;
use super::scalar::{HbarSeries, WeylScalar};
use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::moments::{keys, Flavor};
use crate::potential::PolynomialPotential;
use crate::symbolic::{Expr, Rational, System, Target};

/// One summand of H(q+δq, p+δp) − H(q,p): a scalar prefactor in the centroid
/// variables times a polynomial in the deviations.
struct Piece {
    coeff: Rational,
    lambda: Option<usize>,
    q_pow: u32,
    p_pow: u32,
    poly: WeylPolynomial<HbarSeries>,
}

fn pieces(v: &PolynomialPotential) -> Vec<Piece> {
    let mono = |a, b| WeylPolynomial::monomial(a, b, HbarSeries::one());
    let mut out = vec![
        Piece { coeff: Rational::new(1, 2), lambda: None, q_pow: 0, p_pow: 0, poly: mono(2, 0) },
        Piece { coeff: Rational::from_integer(1), lambda: None, q_pow: 0, p_pow: 1, poly: mono(1, 0) },
    ];
    // λ_k (q + δq)^k = Σ_n C(k,n) λ_k q^{k-n} δq^n
    for &k in v.coefficients().keys() {
        for n in 1..=k {
            out.push(Piece {
                coeff: Rational::from_integer(binomial(k, n) as i128),
                lambda: Some(k),
                q_pow: (k - n) as u32,
                p_pow: 0,
                poly: mono(0, n),
            });
        }
    }
    out
}

/// ⟨{W_{a,b}, H}⟩ with the truncation rule applied to every moment factor.
fn bracket_expectation(a: usize, b: usize, v: &PolynomialPotential, flavor: Flavor, n_max: usize) -> Expr {
    let w = WeylPolynomial::monomial(a, b, HbarSeries::one());
    let mut e = Expr::new();
    for piece in pieces(v) {
        let br = match flavor {
            Flavor::Quantum => w.moyal_with(&piece.poly, &HbarSeries::hbar()),
            Flavor::Classical => w.poisson(&piece.poly),
        };
        for (&(c, d), series) in br.terms() {
            for (h, z) in series.coeffs().iter().enumerate() {
                if z.re.is_zero() && z.im.is_zero() {
                    continue;
                }
                assert!(z.im.is_zero(), "bracket of real symbols must be real");
                e.add(
                    z.re * piece.coeff,
                    piece.lambda,
                    piece.q_pow,
                    piece.p_pow,
                    h as u32,
                    &[(c as isize, d as isize)],
                    n_max,
                );
            }
        }
    }
    e
}

/// (dq/dt, dp/dt).
pub fn derive_centroid_eom(v: &PolynomialPotential, flavor: Flavor, n_max: usize) -> (Expr, Expr) {
    (bracket_expectation(0, 1, v, flavor, n_max), bracket_expectation(1, 0, v, flavor, n_max))
}

/// dG^{a,b}/dt: the bracket plus the shift of the centre,
/// −a (dp/dt) G^{a−1,b} − b (dq/dt) G^{a,b−1}.
pub fn derive_moment_eom(
    a: usize,
    b: usize,
    v: &PolynomialPotential,
    flavor: Flavor,
    n_max: usize,
) -> Result<Expr> {
    if a + b < 2 || a + b > n_max {
        return Err(Error::InvalidArgument(format!("moment ({a},{b}) outside orders 2..={n_max}")));
    }
    let (qd, pd) = derive_centroid_eom(v, flavor, n_max);
    let mut e = bracket_expectation(a, b, v, flavor, n_max);
    let (ai, bi) = (a as isize, b as isize);
    e.add_expr(&pd.times_moment(ai - 1, bi, n_max).scaled(Rational::from_integer(-(a as i128))));
    e.add_expr(&qd.times_moment(ai, bi - 1, n_max).scaled(Rational::from_integer(-(b as i128))));
    Ok(e)
}

pub fn derive_system(v: &PolynomialPotential, flavor: Flavor, n_max: usize) -> Result<System> {
    let (qd, pd) = derive_centroid_eom(v, flavor, n_max);
    let mut equations = BTreeMap::new();
    equations.insert(Target::Q, qd);
    equations.insert(Target::P, pd);
    for k in keys(n_max) {
        equations.insert(Target::Moment(k), derive_moment_eom(k.a, k.b, v, flavor, n_max)?);
    }
    Ok(System { n_max, equations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{gaussian_moments, MomentSet};

    fn eval(e: &Expr, v: &PolynomialPotential, s: &MomentSet) -> f64 {
        e.evaluate(v, s)
    }

    #[test]
    fn harmonic_second_order() {
        let v = PolynomialPotential::harmonic(0.0, 3.0);
        let e02 = derive_moment_eom(0, 2, &v, Flavor::Quantum, 4).unwrap();
        let mut s = gaussian_moments(0.2, 0.1, 4).unwrap();
        s.set(1, 1, 0.07);
        assert!((eval(&e02, &v, &s) - 2.0 * 0.07).abs() < 1e-15);
        let e11 = derive_moment_eom(1, 1, &v, Flavor::Quantum, 4).unwrap();
        assert!((eval(&e11, &v, &s) - (s.get(2, 0) - 3.0 * s.get(0, 2))).abs() < 1e-15);
        assert!(!e11.contains_hbar());
    }

    #[test]
    fn quartic_hbar_line() {
        let v = PolynomialPotential::quartic(1.0);
        let e = derive_moment_eom(3, 0, &v, Flavor::Quantum, 6).unwrap();
        let mut s = MomentSet::zeros(Flavor::Quantum, 0.5, 6).unwrap();
        s.q = 0.7;
        // only the ħ line survives when all moments vanish
        assert!((eval(&e, &v, &s) - 6.0 * 0.25 * 0.7).abs() < 1e-15);
        let c = derive_moment_eom(3, 0, &v, Flavor::Classical, 6).unwrap();
        assert!(!c.contains_hbar());
        assert_eq!(c, e.without_hbar());
    }

    #[test]
    fn momentum_terms_cancel() {
        let v = PolynomialPotential::new([(1, 0.3), (3, -1.0), (4, 2.0)]);
        let sys = derive_system(&v, Flavor::Quantum, 6).unwrap();
        for (t, e) in &sys.equations {
            let p_terms = e.terms().filter(|(m, _)| m.p_pow > 0).count();
            assert_eq!(p_terms, usize::from(*t == Target::Q), "{t:?}");
        }
    }
}
