//! Moment hierarchies for a particle in a polynomial potential.
//!
//! States are the centroid (q, p) plus Weyl-ordered central moments
//! G^{a,b} (or classical C^{a,b}) up to a cutoff order. The crate evolves the
//! truncated hierarchy, solves for its stationary states, checks the
//! positivity constraints a physical state must satisfy, and provides
//! brute-force Monte-Carlo and wavefunction solvers to validate all of it.

pub mod combinatorics;
pub mod diagnostics;
pub mod eom;
pub mod error;
pub mod hamiltonian;
pub mod harmonic;
pub mod inequalities;
pub mod integrator;
pub mod moments;
pub mod oracle;
pub mod potential;
pub mod stationary;
pub mod symbolic;
pub mod weyl;

pub use error::{Error, Result};
pub use hamiltonian::{centroid_energy, effective_hamiltonian};
pub use moments::{gaussian_moments, Flavor, MomentKey, MomentSet, TruncationPolicy};
pub use potential::PolynomialPotential;
