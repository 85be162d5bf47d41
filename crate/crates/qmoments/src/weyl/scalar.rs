use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::{Complex, Complex64};
use num_traits::{One, ToPrimitive, Zero};

use crate::symbolic::Rational;

/// Coefficient ring of a Weyl polynomial.
pub trait WeylScalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn imag_unit() -> Self;
    fn from_rational(r: Rational) -> Self;
    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn from_int(n: i128) -> Self {
        Self::from_rational(Rational::from_integer(n))
    }
}

impl WeylScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn imag_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn from_rational(r: Rational) -> Self {
        Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

pub type ExactComplex = Complex<Rational>;

/// Polynomial in ħ with complex rational coefficients; `coeffs[h]` multiplies ħ^h.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HbarSeries {
    coeffs: Vec<ExactComplex>,
}

impl HbarSeries {
    pub fn constant(c: ExactComplex) -> Self {
        Self { coeffs: vec![c] }.trimmed()
    }

    /// The formal symbol ħ itself.
    pub fn hbar() -> Self {
        Self { coeffs: vec![ExactComplex::zero(), ExactComplex::one()] }
    }

    pub fn coeffs(&self) -> &[ExactComplex] {
        &self.coeffs
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    /// Value at a numeric ħ.
    pub fn at(&self, hbar: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * hbar + Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN));
        }
        acc
    }
}

impl Add for HbarSeries {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = ExactComplex::zero();
        let coeffs = (0..n)
            .map(|i| *self.coeffs.get(i).unwrap_or(&z) + *o.coeffs.get(i).unwrap_or(&z))
            .collect();
        Self { coeffs }.trimmed()
    }
}

impl Neg for HbarSeries {
    type Output = Self;
    fn neg(self) -> Self {
        Self { coeffs: self.coeffs.into_iter().map(|c| -c).collect() }
    }
}

impl Sub for HbarSeries {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Mul for HbarSeries {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Self::default();
        }
        let mut coeffs = vec![ExactComplex::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j] + *a * *b;
            }
        }
        Self { coeffs }.trimmed()
    }
}

impl WeylScalar for HbarSeries {
    fn zero() -> Self {
        Self::default()
    }
    fn one() -> Self {
        Self::constant(ExactComplex::one())
    }
    fn imag_unit() -> Self {
        Self::constant(ExactComplex::new(Rational::zero(), Rational::one()))
    }
    fn from_rational(r: Rational) -> Self {
        Self::constant(ExactComplex::new(r, Rational::zero()))
    }
    fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}
