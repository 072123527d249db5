//! Scalars, Laurent polynomials in zeta = z^{1/N}, polynomial matrices,
//! determinants, characteristic polynomials and roots.

mod curve;
mod dual;
mod laurent;
mod matrix;
mod poly;
mod polymatrix;
mod roots;
mod scalar;

pub use curve::{genus, SpectralCurve};
pub use dual::Dual;
pub use laurent::LaurentPoly;
pub use matrix::Mat;
pub use poly::Poly;
pub use polymatrix::{char_poly, det_fraction_free, det_interpolate, DetOptions, PolyMatrix};
pub use roots::{roots, roots_simple, Root};
pub use scalar::{real_part, Rational, Scalar, NEGLIGIBLE};
