use proptest::prelude::*;
use qmoments::harmonic::{harmonic_stationary_quantum, energy_level};
use qmoments::inequalities::*;
use qmoments::moments::moment_count;
use qmoments::oracle::{ground_state_grid, GroundSpec};
use qmoments::stationary::solve_quartic_stationary;
use qmoments::{gaussian_moments, Flavor, MomentSet, PolynomialPotential};

fn perturbed_gaussian(n_max: usize) -> impl Strategy<Value = MomentSet> {
    (0.2f64..3.0, 0.1f64..1.0, prop::collection::vec(-0.3f64..0.3, moment_count(n_max)))
        .prop_map(move |(w2, hbar, noise)| {
            let mut s = gaussian_moments(w2, hbar, n_max).unwrap();
            for (v, e) in s.values_mut().iter_mut().zip(noise) {
                *v += e * (v.abs() + 0.05);
            }
            s
        })
}

fn classical_state(n_max: usize) -> impl Strategy<Value = MomentSet> {
    prop::collection::vec(-1.0f64..1.0, moment_count(n_max))
        .prop_map(move |v| MomentSet::from_values(Flavor::Classical, 0.0, 0.0, 0.0, n_max, v).unwrap())
}

proptest! {
    #[test]
    fn psd_verdict_is_scale_invariant(s in perturbed_gaussian(8), r in 1usize..=4) {
        let verdicts: Vec<bool> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&k| moment_matrix_scaled(&s, r, k).unwrap().is_psd())
            .collect();
        prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{:?}", verdicts);
    }

    #[test]
    fn classical_matrix_is_hankel(s in classical_state(8), r in 1usize..=4) {
        let m = moment_matrix(&s, r).unwrap();
        for (i, x) in m.basis.iter().enumerate() {
            for (j, y) in m.basis.iter().enumerate() {
                let z = m.matrix[(i, j)];
                prop_assert_eq!(z.im, 0.0);
                prop_assert_eq!(z.re, s.get(x.a + y.a, x.b + y.b));
            }
        }
        // the constant row only meets the order-0 and order-≥2 entries
        for (j, y) in m.basis.iter().enumerate() {
            if y.order() == 1 {
                prop_assert_eq!(m.matrix[(0, j)].re, 0.0);
            }
        }
    }

    #[test]
    fn first_order_schwarz_is_heisenberg(s in perturbed_gaussian(2)) {
        let suite = SchwarzSuite::new(1, s.hbar).unwrap();
        let rep = suite.check(&s).unwrap();
        let pair = rep.constraints.iter().find(|c| c.id == "schwarz_q_p").unwrap();
        let h = check_heisenberg(&s);
        if h.margin.abs() > 1e-9 {
            prop_assert_eq!(pair.margin > 0.0, h.margin > 0.0);
        }
    }
}

fn physical_states() -> Vec<(String, MomentSet)> {
    let mut out = Vec::new();
    for w2 in [0.05, 0.5, 4.0] {
        out.push((format!("gaussian w²={w2}"), gaussian_moments(w2, 0.5, 8).unwrap()));
    }
    for n in 0..3 {
        let e = energy_level(n, 1.3, 0.4);
        out.push((format!("oscillator level {n}"), harmonic_stationary_quantum(e, 1.3, 0.4, 8).unwrap()));
    }
    let v = PolynomialPotential::quartic(1.0);
    let g = ground_state_grid(&v, 1.0, &GroundSpec::for_potential(&v, 1.0)).unwrap();
    out.push(("quartic ground state (grid)".into(), g.moments));
    out
}

#[test]
fn physical_states_pass_every_suite() {
    for (name, s) in physical_states() {
        let top = s.n_max / 2;
        assert!(check_all(&s, None).unwrap().passed(), "{name}");
        for r in 1..=top {
            let m = moment_matrix(&s, r).unwrap();
            assert!(m.margin >= -1e-10 * m.matrix[(0, 0)].re.max(1.0) && m.is_psd(), "{name} r={r}: {}", m.margin);
            let rep = SchwarzSuite::new(r, s.hbar).unwrap().check(&s).unwrap();
            assert!(rep.passed(), "{name} r={r}: {:?}", rep.worst());
        }
    }
}

#[test]
fn quartic_heisenberg_is_energy_times_width() {
    let (lambda, hbar) = (1.0, 1.0);
    for e in [0.5, 0.9, 1.5] {
        for g02 in [0.05, 0.15, 0.3] {
            let mut s = MomentSet::zeros(Flavor::Quantum, hbar, 2).unwrap();
            s.set(2, 0, 4.0 * e / 3.0);
            s.set(0, 2, g02);
            let by_energy = e * g02 >= 3.0 * hbar * hbar / 16.0;
            assert_eq!(check_heisenberg(&s).margin >= 0.0, by_energy);
            if let Ok(sol) = solve_quartic_stationary(e, g02, lambda, hbar, 12) {
                assert!((sol.state.get(2, 0) - 4.0 * e / 3.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn constructed_violation_is_reported() {
    let mut s = gaussian_moments(1.0, 1.0, 4).unwrap();
    s.set(2, 2, -1e-3);
    let bad: Vec<_> = check_even_even(&s).into_iter().filter(|c| c.margin < 0.0).collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].id, "even_even_2_2");
    assert!(!check_all(&s, None).unwrap().passed());
}
