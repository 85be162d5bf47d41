use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qmoments::combinatorics::binomial;
use qmoments::eom::{centroid_equations, moment_equation};
use qmoments::moments::keys;
use qmoments::symbolic::Rational;
use qmoments::weyl::{
    derive_centroid_eom, derive_moment_eom, moyal_bracket, poisson_bracket, star_product, ExactComplex, HbarSeries,
    WeylPolynomial,
};
use qmoments::{Flavor, PolynomialPotential};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn poly(terms: &[((usize, usize), i32)]) -> WeylPolynomial {
    let mut p = WeylPolynomial::zero();
    for &((a, b), k) in terms {
        p.add_term(a, b, c(k as f64));
    }
    p
}

fn exact_poly(terms: &[((usize, usize), i32)]) -> WeylPolynomial<HbarSeries> {
    let mut p = WeylPolynomial::zero();
    for &((a, b), k) in terms {
        p.add_term(a, b, HbarSeries::constant(ExactComplex::new(Rational::from_integer(k as i128), Rational::from_integer(0))));
    }
    p
}

fn terms_strategy(max_deg: usize) -> impl Strategy<Value = Vec<((usize, usize), i32)>> {
    prop::collection::vec(
        ((0..=max_deg, 0..=max_deg).prop_filter("degree", move |(a, b)| a + b <= max_deg), -5i32..=5),
        1..6,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn star_at_zero_hbar_is_commutative_product(f in terms_strategy(6), g in terms_strategy(6)) {
        let (f, g) = (poly(&f), poly(&g));
        let s = star_product(&f, &g, 0.0);
        prop_assert_eq!(&s, &f.product(&g));
        prop_assert_eq!(s, star_product(&g, &f, 0.0));
    }

    #[test]
    fn star_is_associative(f in terms_strategy(3), g in terms_strategy(3), h in terms_strategy(3)) {
        let hb = HbarSeries::hbar();
        let (f, g, h) = (exact_poly(&f), exact_poly(&g), exact_poly(&h));
        let left = f.star_with(&g, &hb).star_with(&h, &hb);
        let right = f.star_with(&g.star_with(&h, &hb), &hb);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn star_of_real_symbols_conjugates(f in terms_strategy(4), g in terms_strategy(4)) {
        // (f⋆g)* = g*⋆f* for the Hermitian adjoint
        let (f, g) = (poly(&f), poly(&g));
        let lhs = star_product(&f, &g, 0.3).conj();
        let rhs = star_product(&g.conj(), &f.conj(), 0.3);
        let diff = lhs.minus(&rhs);
        prop_assert!(diff.terms().all(|(_, z)| z.norm() < 1e-9));
    }
}

/// Weyl-ordered monomial as a matrix on the first `levels` oscillator states,
/// with δq̂ = √(ħ/2)(â + â†) and δp̂ = i√(ħ/2)(â† − â).
fn weyl_operator(a: usize, b: usize, hbar: f64, levels: usize) -> DMatrix<Complex64> {
    let mut lower = DMatrix::<Complex64>::zeros(levels, levels);
    for n in 1..levels {
        lower[(n - 1, n)] = c((n as f64).sqrt());
    }
    let raise = lower.adjoint();
    let s = (hbar / 2.0).sqrt();
    let q = (&lower + &raise) * c(s);
    let p = (&raise - &lower) * Complex64::new(0.0, s);
    let n = a + b;
    let mut sum = DMatrix::<Complex64>::zeros(levels, levels);
    // every placement of the a momentum factors among the n slots
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a {
            continue;
        }
        let mut m = DMatrix::<Complex64>::identity(levels, levels);
        for slot in 0..n {
            m = if mask & (1 << slot) != 0 { m * &p } else { m * &q };
        }
        sum += m;
    }
    sum / c(binomial(n, a) as f64)
}

fn operator(f: &WeylPolynomial, hbar: f64, levels: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::<Complex64>::zeros(levels, levels);
    for (&(a, b), z) in f.terms() {
        out += weyl_operator(a, b, hbar, levels) * *z;
    }
    out
}

#[test]
fn star_product_represents_operator_product() {
    let hbar = 0.7;
    let levels = 40;
    let cases = [
        (poly(&[((1, 0), 1)]), poly(&[((0, 1), 1)])),
        (poly(&[((2, 1), 2), ((0, 2), -1)]), poly(&[((1, 2), 1), ((3, 0), 3)])),
        (poly(&[((0, 4), 1), ((1, 1), 1)]), poly(&[((2, 2), -1), ((4, 0), 1)])),
        (poly(&[((3, 1), 1)]), poly(&[((1, 3), 1), ((0, 0), 5)])),
    ];
    // products of up to eight ladder factors are exact below this level
    let block = levels - 9;
    for (f, g) in &cases {
        let lhs = operator(&star_product(f, g, hbar), hbar, levels);
        let rhs = operator(f, hbar, levels) * operator(g, hbar, levels);
        for i in 0..block {
            for j in 0..block {
                let d = (lhs[(i, j)] - rhs[(i, j)]).norm();
                assert!(d < 1e-9 * (1.0 + rhs[(i, j)].norm()), "({i},{j}): {d}");
            }
        }
    }
}

#[test]
fn moyal_tends_to_poisson_quadratically() {
    let f = poly(&[((0, 4), 1), ((1, 2), 1), ((3, 0), -2)]);
    let g = poly(&[((3, 0), 1), ((0, 3), 1), ((2, 2), 1)]);
    let pb = poisson_bracket(&f, &g);
    let err = |h: f64| {
        let m = moyal_bracket(&f, &g, h).unwrap().minus(&pb);
        m.terms().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    };
    let (e2, e3, e4) = (err(1e-2), err(1e-3), err(1e-4));
    for (hi, lo) in [(e2, e3), (e3, e4)] {
        let slope = (hi / lo).log10();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }
    assert!(moyal_bracket(&f, &g, 0.0).is_err());
}

fn potentials() -> Vec<(&'static str, PolynomialPotential)> {
    vec![
        ("linear", PolynomialPotential::linear(0.7)),
        ("harmonic", PolynomialPotential::harmonic(0.0, 2.5)),
        ("quartic", PolynomialPotential::quartic(1.3)),
    ]
}

#[test]
fn derived_hierarchy_equals_hand_coded() {
    for (name, v) in potentials() {
        for flavor in [Flavor::Quantum, Flavor::Classical] {
            for n_max in [2, 5, 10] {
                assert_eq!(derive_centroid_eom(&v, flavor, n_max), centroid_equations(&v, n_max), "{name}");
                for k in keys(n_max) {
                    let derived = derive_moment_eom(k.a, k.b, &v, flavor, n_max).unwrap();
                    let hand = moment_equation(k.a, k.b, &v, flavor, n_max);
                    assert_eq!(derived, hand, "{name} {flavor:?} N={n_max} {k}");
                }
            }
        }
    }
}
