use proptest::prelude::*;
use qmoments::moments::keys;
use qmoments::oracle::{ground_state_grid, GroundSpec};
use qmoments::stationary::*;
use qmoments::{Flavor, PolynomialPotential};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn units_rescale_moments(
        e in 0.3f64..3.0, g02 in 0.1f64..1.0, lambda in 0.3f64..2.0, hbar in 0.1f64..1.0,
        sq in 0.5f64..2.0, sp in 0.5f64..2.0,
    ) {
        // q → s_q q, p → s_p p: E ~ p², λ ~ p²/q⁴, ħ ~ pq
        let n_max = 12;
        let base = quartic_stationary_moments(e, g02, lambda, hbar, n_max).unwrap();
        let scaled = quartic_stationary_moments(
            e * sp * sp, g02 * sq * sq, lambda * sp * sp / sq.powi(4), hbar * sp * sq, n_max,
        ).unwrap();
        for k in keys(n_max).filter(|k| k.is_even_even()) {
            let expect = base.state.get(k.a, k.b) * sp.powi(k.a as i32) * sq.powi(k.b as i32);
            let got = scaled.state.get(k.a, k.b);
            prop_assert!((got - expect).abs() <= 1e-11 * expect.abs().max(1e-300), "{}: {} vs {}", k, got, expect);
        }
    }

    #[test]
    fn accepted_solutions_respect_uncertainty(e in 0.05f64..3.0, g02 in 0.01f64..1.0, hbar in 0.1f64..1.5) {
        if let Ok(sol) = solve_quartic_stationary(e, g02, 1.0, hbar, 12) {
            prop_assert!(e * g02 >= 3.0 * hbar * hbar / 16.0 * (1.0 - 1e-12));
            prop_assert!(sol.state.keys().filter(|k| k.is_even_even() && k.order() <= 6).all(|k| sol.state.get(k.a, k.b) >= 0.0));
        }
    }

    #[test]
    fn interior_equations_vanish(e in 0.3f64..3.0, g02 in 0.1f64..1.0, lambda in 0.3f64..2.0, hbar in 0.1f64..1.0, n_max in 8usize..16) {
        let sol = quartic_stationary_moments(e, g02, lambda, hbar, n_max).unwrap();
        prop_assert!(sol.residual == 0.0);
        let r = fixed_point_residual(&sol, n_max - 4).unwrap();
        prop_assert!(r < 1e-12, "residual {}", r);
    }
}

#[test]
fn weak_coupling_diverges_as_inverse_lambda() {
    let (e, g02, hbar) = (0.8, 0.4, 0.5);
    let at = |l: f64| quartic_stationary_moments(e, g02, l, hbar, 14).unwrap().state;
    let (s0, s2, s4) = (at(1.0), at(1e-2), at(1e-4));
    for (a, b) in [(0, 4), (2, 4), (0, 6)] {
        let power = (s4.get(a, b) / s2.get(a, b)).ln() / (1e-4f64 / 1e-2).ln();
        assert!((power + 1.0).abs() < 0.01, "G^{{{a},{b}}} ~ λ^{power}");
        assert!(s0.get(a, b) < s2.get(a, b));
    }
    // G^{2,0} = 4E/3 for every λ
    for s in [&s0, &s2, &s4] {
        assert!((s.get(2, 0) - 4.0 * e / 3.0).abs() < 1e-12);
    }
}

#[test]
fn classical_limit_is_the_hbar_free_part() {
    let (e, g02, lambda) = (1.1, 0.3, 0.9);
    let c = quartic_stationary_moments(e, g02, lambda, 0.0, 12).unwrap().state;
    assert_eq!(c.flavor, Flavor::Classical);
    let at = |h: f64| quartic_stationary_moments(e, g02, lambda, h, 12).unwrap().state;
    let (q1, q2) = (at(1e-3), at(2e-3));
    for k in keys(converged_order(12)).filter(|k| k.is_even_even()) {
        let extrap = (4.0 * q1.get(k.a, k.b) - q2.get(k.a, k.b)) / 3.0;
        let x = c.get(k.a, k.b);
        assert!((extrap - x).abs() <= 1e-10 * x.abs(), "{k}: {extrap} vs {x}");
    }
    // classical recursion drops the ħ² term
    let g = position_recursion(4, lambda, e, 0.0, &[1.0, 0.0, g02, 0.0], 8, Flavor::Classical).unwrap();
    assert!((g[8] - c.get(0, 8)).abs() < 1e-12 * g[8]);
}

#[test]
fn grid_ground_state_satisfies_the_energy_relations() {
    for lambda in [1.0, 0.3] {
        let v = PolynomialPotential::quartic(lambda);
        let hbar = 1.0;
        let g = ground_state_grid(&v, hbar, &GroundSpec::for_potential(&v, hbar)).unwrap();
        let e = g.energy;
        let m = &g.moments;
        assert!((m.get(0, 4) - e / (3.0 * lambda)).abs() < 1e-6 * m.get(0, 4));
        assert!((m.get(2, 0) - 4.0 * e / 3.0).abs() < 1e-6 * m.get(2, 0));
        assert!((m.get(2, 0) / 2.0 + lambda * m.get(0, 4) - e).abs() < 1e-6 * e);
        let rel = solve_quartic_stationary(e, m.get(0, 2), lambda, hbar, 16).unwrap();
        assert!((rel.state.get(2, 2) - m.get(2, 2)).abs() < 1e-6 * m.get(2, 2));
        assert!((rel.state.get(4, 0) - m.get(4, 0)).abs() < 1e-6 * m.get(4, 0));
    }
}

#[test]
fn bounds_are_nested_and_exclude_nothing_physical_at_low_order() {
    let b4 = ground_energy_bounds(1.0, 1.0, 4).unwrap();
    let b6 = ground_energy_bounds(1.0, 1.0, 6).unwrap();
    assert!(b4.contiguous && b6.contiguous);
    assert!(b4.lower <= b6.lower + 1e-9 && b6.upper <= b4.upper + 1e-9);
    let v = PolynomialPotential::quartic(1.0);
    let e0 = ground_state_grid(&v, 1.0, &GroundSpec::for_potential(&v, 1.0)).unwrap().energy;
    // the saturation assumption is not met by the true ground state
    assert!(e0 > b6.upper && e0 < b4.upper);
    let json = serde_json::to_value(&b6).unwrap();
    assert_eq!(json["refined_by"], "bisection");
    assert!(ground_energy_bounds(1.0, 1.0, 5).is_err());
}

#[test]
fn higher_cutoffs_fix_more_orders() {
    let c = convergence_study(1.3, 0.7, 1.1, 0.9, &[10, 14, 18, 22]).unwrap();
    let through: Vec<usize> = c.iter().map(|x| x.agrees_through).collect();
    assert!(through.windows(2).all(|w| w[0] < w[1]), "{through:?}");
}
