use proptest::prelude::*;
use qmoments::eom::{hand_system, moment_equation, rhs_moments, CompiledRhs};
use qmoments::hamiltonian::moment_energy;
use qmoments::moments::{keys, moment_count};
use qmoments::symbolic::Target;
use qmoments::{centroid_energy, effective_hamiltonian, Flavor, MomentSet, PolynomialPotential, TruncationPolicy};

fn state_strategy(n_max: usize) -> impl Strategy<Value = MomentSet> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.0f64..1.0,
        prop::collection::vec(-2.0f64..2.0, moment_count(n_max)),
    )
        .prop_map(move |(q, p, hbar, values)| MomentSet::from_values(Flavor::Quantum, hbar, q, p, n_max, values).unwrap())
}

proptest! {
    #[test]
    fn json_round_trip_is_bit_exact(
        n_max in 2usize..9,
        raw in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 45),
        q in prop::num::f64::NORMAL,
        hbar in 0.0f64..10.0,
    ) {
        let values = raw.iter().cycle().take(moment_count(n_max)).copied().collect();
        let s = MomentSet::from_values(Flavor::Quantum, hbar, q, -q / 3.0, n_max, values).unwrap();
        let back = MomentSet::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back.q.to_bits(), s.q.to_bits());
        prop_assert_eq!(back.hbar.to_bits(), s.hbar.to_bits());
        for (x, y) in back.values().iter().zip(s.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn harmonic_moment_energy(s in state_strategy(4), omega_sq in 0.1f64..5.0) {
        let v = PolynomialPotential::harmonic(0.0, omega_sq);
        let split = effective_hamiltonian(&s, &v) - centroid_energy(&s, &v);
        let expect = (s.get(2, 0) + omega_sq * s.get(0, 2)) / 2.0;
        prop_assert!((split - moment_energy(&s, &v)).abs() <= 1e-14 * (1.0 + split.abs()));
        prop_assert!((split - expect).abs() <= 1e-13 * (1.0 + expect.abs()));
    }

    #[test]
    fn harmonic_rhs_is_the_rotation(s in state_strategy(8), omega_sq in 0.1f64..5.0) {
        let v = PolynomialPotential::harmonic(0.0, omega_sq);
        let rhs = CompiledRhs::new(&v, Flavor::Quantum, s.hbar, TruncationPolicy { n_max: 8 }).unwrap();
        let d = rhs_moments(&s, &rhs).unwrap();
        for k in keys(8) {
            let (a, b) = (k.a, k.b);
            let mut expect = 0.0;
            if b > 0 {
                expect += b as f64 * s.get(a + 1, b - 1);
            }
            if a > 0 {
                expect -= a as f64 * omega_sq * s.get(a - 1, b + 1);
            }
            // the generic path must land on the same numbers, not just close
            prop_assert!((d[&k] - expect).abs() <= 4.0 * f64::EPSILON * (1.0 + expect.abs()), "{} {} {}", k, d[&k], expect);
        }
    }

    #[test]
    fn classical_rhs_is_quantum_without_hbar(s in state_strategy(8)) {
        let v = PolynomialPotential::new([(1, 0.3), (3, -0.5), (4, 1.2)]);
        for k in keys(8) {
            let qe = moment_equation(k.a, k.b, &v, Flavor::Quantum, 8);
            let ce = moment_equation(k.a, k.b, &v, Flavor::Classical, 8);
            prop_assert_eq!(&ce, &qe.without_hbar());
            let classical_state = s.to_classical();
            prop_assert_eq!(ce.evaluate(&v, &classical_state), qe.evaluate(&v, &classical_state));
        }
    }
}

#[test]
fn harmonic_symbolic_specialization_is_exact() {
    let v = PolynomialPotential::harmonic(0.0, 2.0);
    for k in keys(10) {
        let e = moment_equation(k.a, k.b, &v, Flavor::Quantum, 10);
        assert!(!e.contains_hbar(), "{k}");
        for (m, _) in e.terms() {
            assert_eq!(m.factors.len(), 1, "{k}: nonlinear term");
            let f = m.factors[0];
            assert!(f == qmoments::MomentKey::new(k.a + 1, k.b.wrapping_sub(1)) || f == qmoments::MomentKey::new(k.a.wrapping_sub(1), k.b + 1));
        }
    }
}

#[test]
fn quartic_order_coupling_footprint() {
    let v = PolynomialPotential::quartic(1.0);
    let n_max = 12;
    for flavor in [Flavor::Quantum, Flavor::Classical] {
        let low = if flavor == Flavor::Quantum { 3 } else { 1 };
        for k in keys(n_max) {
            let n = k.order();
            let orders = moment_equation(k.a, k.b, &v, flavor, n_max).referenced_orders();
            for o in orders {
                assert!(
                    o <= 3 || (n.saturating_sub(low)..=n + 2).contains(&o),
                    "{flavor:?} {k} references order {o}"
                );
            }
        }
    }
}

#[test]
fn system_dumps_every_equation() {
    let v = PolynomialPotential::quartic(1.0);
    let sys = hand_system(&v, Flavor::Quantum, 4);
    assert_eq!(sys.equations.len(), 2 + moment_count(4));
    assert!(sys.equations.contains_key(&Target::Q));
    let json: serde_json::Value = serde_json::from_str(&sys.to_json()).unwrap();
    assert!(json.to_string().contains("hbar_power"));
}
