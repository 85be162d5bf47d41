use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::falling;

/// V(q) = Σ λ_k q^k with finitely many non-zero coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolynomialPotential {
    coefficients: BTreeMap<usize, f64>,
}

impl PolynomialPotential {
    pub fn new(coefficients: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut map = BTreeMap::new();
        for (k, v) in coefficients {
            if v != 0.0 {
                *map.entry(k).or_insert(0.0) += v;
            }
        }
        map.retain(|_, v| *v != 0.0);
        Self { coefficients: map }
    }

    pub fn free() -> Self {
        Self::default()
    }

    /// V = βq.
    pub fn linear(beta: f64) -> Self {
        Self::new([(1, beta)])
    }

    /// V = βq + ω²q²/2.
    pub fn harmonic(beta: f64, omega_sq: f64) -> Self {
        Self::new([(1, beta), (2, omega_sq / 2.0)])
    }

    /// V = λq⁴.
    pub fn quartic(lambda: f64) -> Self {
        Self::new([(4, lambda)])
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients.get(&k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.keys().next_back().copied().unwrap_or(0)
    }

    pub fn value(&self, q: f64) -> f64 {
        self.derivative(0, q)
    }

    /// V^{(n)}(q), identically zero above the degree.
    pub fn derivative(&self, n: usize, q: f64) -> f64 {
        self.coefficients
            .iter()
            .filter(|(k, _)| **k >= n)
            .map(|(&k, &c)| c * falling(k, n) as f64 * q.powi((k - n) as i32))
            .sum()
    }

    /// V'' at q; only meaningful as a frequency for quadratic potentials.
    pub fn omega_sq(&self) -> f64 {
        self.derivative(2, 0.0)
    }

    pub fn beta(&self) -> f64 {
        self.coefficient(1)
    }

    pub fn is_quadratic(&self) -> bool {
        self.degree() <= 2
    }
}
