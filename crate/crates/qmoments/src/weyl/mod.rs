//! Weyl-symbol algebra in the deviations (δp, δq).

mod derive;
mod poly;
mod scalar;

pub use derive::{derive_centroid_eom, derive_moment_eom, derive_system};
pub use poly::{expectation, moyal_bracket, poisson_bracket, star_product, WeylPolynomial};
pub use scalar::{ExactComplex, HbarSeries, WeylScalar};
