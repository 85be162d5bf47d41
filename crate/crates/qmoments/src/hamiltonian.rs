use crate::combinatorics::factorial_f64;
use crate::moments::MomentSet;
use crate::potential::PolynomialPotential;

/// Expectation of the Hamiltonian expanded about the centroid:
/// p²/2 + V(q) + G^{2,0}/2 + Σ_{n≥2} V^{(n)}(q) G^{0,n}/n!.
pub fn effective_hamiltonian(state: &MomentSet, v: &PolynomialPotential) -> f64 {
    centroid_energy(state, v) + moment_energy(state, v)
}

/// The moment part of the effective Hamiltonian alone.
pub fn moment_energy(state: &MomentSet, v: &PolynomialPotential) -> f64 {
    let top = v.degree().min(state.n_max);
    let mut e = state.get(2, 0) / 2.0;
    for n in 2..=top {
        e += v.derivative(n, state.q) * state.get(0, n) / factorial_f64(n);
    }
    e
}

pub fn centroid_energy(state: &MomentSet, v: &PolynomialPotential) -> f64 {
    state.p * state.p / 2.0 + v.value(state.q)
}
