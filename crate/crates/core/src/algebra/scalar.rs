//! Scalar fields used throughout the pipeline.
//!
//! Three implementations exist: exact rationals ([`Rational`]), complex
//! doubles ([`Complex64`]) and dual-extended complex numbers
//! ([`Dual`](super::Dual)) carrying a gradient with respect to the canonical
//! coordinates.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::laurent::LaurentPoly;
use super::poly::Poly;
use super::polymatrix::{det_fraction_free, det_interpolate, DetOptions, PolyMatrix};
use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Relative threshold below which a floating coefficient counts as a
/// structural zero.
pub const NEGLIGIBLE: f64 = 1e-11;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    /// Exact binary value for rationals.
    fn from_f64(x: f64) -> Self;
    /// Complex constants; unavailable in exact mode.
    fn from_complex(c: Complex64) -> Result<Self>;

    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;

    /// Numeric value (the primal part for duals).
    fn value(&self) -> Complex64;
    /// Size of the primal part, used for pivoting.
    fn pivot_size(&self) -> f64 {
        self.value().norm()
    }
    /// Size including any derivative part, used for cleaning.
    fn magnitude(&self) -> f64 {
        self.pivot_size()
    }

    /// `self^e` for a positive real `self`; principal branch.
    fn powf(&self, e: f64) -> Result<Self>;

    /// Zero test relative to `scale`: exact in exact mode.
    fn is_negligible(&self, scale: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= NEGLIGIBLE * scale.max(1e-300)
        }
    }

    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        rhs.inv().map(|r| self.clone() * r)
    }

    /// Determinant of a polynomial matrix, strategy chosen per field.
    fn poly_det(m: &PolyMatrix<Self>, opts: &DetOptions) -> Result<LaurentPoly<Self>>;

    /// Lift a simple root `z0` of the primal polynomial of `p` to this
    /// scalar type (implicit differentiation for duals).
    fn lift_root(p: &Poly<Self>, z0: Complex64) -> Result<Self>;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(Zero::zero)
    }
    fn from_complex(_c: Complex64) -> Result<Self> {
        Err(Error::NeedsFloating)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn value(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn pivot_size(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn powf(&self, e: f64) -> Result<Self> {
        if e == e.trunc() && e.abs() < 64.0 {
            let k = e as i32;
            if k < 0 && Zero::is_zero(self) {
                return Err(Error::SingularMatrix);
            }
            return Ok(num_traits::Pow::pow(self, k));
        }
        Err(Error::NeedsFloating)
    }
    fn poly_det(m: &PolyMatrix<Self>, _opts: &DetOptions) -> Result<LaurentPoly<Self>> {
        det_fraction_free(m)
    }
    fn lift_root(_p: &Poly<Self>, _z0: Complex64) -> Result<Self> {
        Err(Error::NeedsFloating)
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_complex(c: Complex64) -> Result<Self> {
        Ok(c)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn inv(&self) -> Option<Self> {
        if Scalar::is_zero(self) {
            None
        } else {
            Some(Complex64::new(1.0, 0.0) / self)
        }
    }
    fn value(&self) -> Complex64 {
        *self
    }
    fn powf(&self, e: f64) -> Result<Self> {
        Ok(Complex64::powf(*self, e))
    }
    fn poly_det(m: &PolyMatrix<Self>, opts: &DetOptions) -> Result<LaurentPoly<Self>> {
        det_interpolate(m, opts)
    }
    fn lift_root(_p: &Poly<Self>, z0: Complex64) -> Result<Self> {
        Ok(z0)
    }
}

/// Parse-friendly display of a scalar for reports: rationals as `a/b`,
/// everything else through its complex value.
pub fn real_part<S: Scalar>(x: &S) -> f64 {
    x.value().re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn rational_arithmetic_is_exact() {
        let a = q(1, 3);
        let b = q(1, 7);
        let c = q(-5, 11);
        assert_eq!(
            (a.clone() + b.clone()) + c.clone(),
            a.clone() + (b.clone() + c.clone())
        );
        assert_eq!(
            a.clone() * (b.clone() + c.clone()),
            a.clone() * b + a * c
        );
    }

    #[test]
    fn rational_rejects_fractional_powers() {
        assert_eq!(q(8, 1).powf(1.0 / 3.0), Err(Error::NeedsFloating));
        assert_eq!(q(2, 1).powf(-2.0).unwrap(), q(1, 4));
    }

    #[test]
    fn complex_negligible_is_relative() {
        let tiny = Complex64::new(1e-14, 0.0);
        assert!(tiny.is_negligible(1.0));
        assert!(!tiny.is_negligible(1e-6));
    }
}
