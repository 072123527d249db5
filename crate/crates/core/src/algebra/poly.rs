//! Dense univariate polynomials in z.

use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::Scalar;

/// Coefficients in ascending powers of z; trailing exact zeros are trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Poly<S> {
    pub fn new(mut coeffs: Vec<S>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: S) -> Self {
        Poly::new(vec![c])
    }

    /// The monic polynomial with the given roots.
    pub fn from_roots(roots: &[S]) -> Self {
        roots.iter().fold(Poly::constant(S::one()), |acc, r| {
            acc * Poly::new(vec![-r.clone(), S::one()])
        })
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    /// Coefficient of z^d (zero beyond the stored range).
    pub fn coeff(&self, d: usize) -> S {
        self.coeffs.get(d).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&S> {
        self.coeffs.last()
    }

    pub fn eval(&self, z: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, c)| c.clone() * S::from_i64(d as i64))
                .collect(),
        )
    }

    pub fn scale(&self, s: &S) -> Self {
        Poly::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }

    /// Largest coefficient magnitude.
    pub fn scale_hint(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.magnitude()))
    }

    /// Drop coefficients negligible relative to the largest one; exact in
    /// exact mode.
    pub fn cleaned(&self) -> Self {
        let scale = self.scale_hint();
        Poly::new(
            self.coeffs
                .iter()
                .map(|c| if c.is_negligible(scale) { S::zero() } else { c.clone() })
                .collect(),
        )
    }
}

impl<S: Scalar> Add for Poly<S> {
    type Output = Poly<S>;
    fn add(self, rhs: Poly<S>) -> Poly<S> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|d| self.coeff(d) + rhs.coeff(d)).collect())
    }
}

impl<S: Scalar> Neg for Poly<S> {
    type Output = Poly<S>;
    fn neg(self) -> Poly<S> {
        Poly::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl<S: Scalar> Sub for Poly<S> {
    type Output = Poly<S>;
    fn sub(self, rhs: Poly<S>) -> Poly<S> {
        self + (-rhs)
    }
}

impl<S: Scalar> Mul for Poly<S> {
    type Output = Poly<S>;
    fn mul(self, rhs: Poly<S>) -> Poly<S> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![S::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Poly::new(out)
    }
}
