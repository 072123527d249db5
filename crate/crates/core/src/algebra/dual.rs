//! Forward-mode dual numbers over the complex field.
//!
//! A [`Dual`] is a complex value together with its gradient with respect to
//! a fixed list of coordinates. An empty gradient stands for a constant, so
//! literals never allocate.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::laurent::LaurentPoly;
use super::poly::Poly;
use super::polymatrix::{det_interpolate, DetOptions, PolyMatrix};
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Dual {
    pub re: Complex64,
    pub grad: Vec<Complex64>,
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({}, d={:?})", self.re, self.grad)
    }
}

impl Dual {
    pub fn constant(re: Complex64) -> Self {
        Dual { re, grad: Vec::new() }
    }

    /// Value `re` seeded with derivative `slope` along coordinate `index`
    /// out of `width`.
    pub fn variable(re: Complex64, index: usize, width: usize, slope: Complex64) -> Self {
        let mut grad = vec![Complex64::new(0.0, 0.0); width];
        grad[index] = slope;
        Dual { re, grad }
    }

    pub fn d(&self, i: usize) -> Complex64 {
        self.grad.get(i).copied().unwrap_or_default()
    }

    pub fn width(&self) -> usize {
        self.grad.len()
    }

    /// f(self) given f(re) and f'(re).
    fn chain(&self, fv: Complex64, dfv: Complex64) -> Dual {
        Dual {
            re: fv,
            grad: self.grad.iter().map(|g| g * dfv).collect(),
        }
    }

    fn zip(a: &[Complex64], b: &[Complex64], f: impl Fn(Complex64, Complex64) -> Complex64) -> Vec<Complex64> {
        let n = a.len().max(b.len());
        let zero = Complex64::new(0.0, 0.0);
        (0..n)
            .map(|i| f(a.get(i).copied().unwrap_or(zero), b.get(i).copied().unwrap_or(zero)))
            .collect()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        if rhs.grad.is_empty() {
            self.re += rhs.re;
            return self;
        }
        if self.grad.is_empty() {
            let mut r = rhs;
            r.re += self.re;
            return r;
        }
        if self.grad.len() >= rhs.grad.len() {
            for (a, b) in self.grad.iter_mut().zip(&rhs.grad) {
                *a += b;
            }
            self.re += rhs.re;
            self
        } else {
            Dual {
                re: self.re + rhs.re,
                grad: Dual::zip(&self.grad, &rhs.grad, |a, b| a + b),
            }
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(mut self) -> Dual {
        self.re = -self.re;
        for g in &mut self.grad {
            *g = -*g;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        self + (-rhs)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        if rhs.grad.is_empty() {
            return self.chain(self.re * rhs.re, rhs.re);
        }
        if self.grad.is_empty() {
            return rhs.chain(self.re * rhs.re, self.re);
        }
        let (a, b) = (self.re, rhs.re);
        Dual {
            re: a * b,
            grad: Dual::zip(&self.grad, &rhs.grad, |da, db| da * b + a * db),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let inv = rhs.inv().unwrap_or_else(|| Dual::constant(Complex64::new(f64::NAN, f64::NAN)));
        self * inv
    }
}

impl Scalar for Dual {
    const EXACT: bool = false;

    fn zero() -> Self {
        Dual::constant(Complex64::new(0.0, 0.0))
    }
    fn one() -> Self {
        Dual::constant(Complex64::new(1.0, 0.0))
    }
    fn from_i64(n: i64) -> Self {
        Dual::constant(Complex64::new(n as f64, 0.0))
    }
    fn from_f64(x: f64) -> Self {
        Dual::constant(Complex64::new(x, 0.0))
    }
    fn from_complex(c: Complex64) -> Result<Self> {
        Ok(Dual::constant(c))
    }
    fn is_zero(&self) -> bool {
        self.re == Complex64::new(0.0, 0.0) && self.grad.iter().all(|g| g.re == 0.0 && g.im == 0.0)
    }
    fn inv(&self) -> Option<Self> {
        if self.re.re == 0.0 && self.re.im == 0.0 {
            return None;
        }
        let r = Complex64::new(1.0, 0.0) / self.re;
        Some(self.chain(r, -r * r))
    }
    fn value(&self) -> Complex64 {
        self.re
    }
    fn magnitude(&self) -> f64 {
        self.grad.iter().fold(self.re.norm(), |m, g| m.max(g.norm()))
    }
    fn powf(&self, e: f64) -> Result<Self> {
        if self.re.norm() == 0.0 {
            return Err(Error::InvalidState("fractional power of zero".into()));
        }
        let v = self.re.powf(e);
        Ok(self.chain(v, v * e / self.re))
    }
    fn poly_det(m: &PolyMatrix<Self>, opts: &DetOptions) -> Result<LaurentPoly<Self>> {
        det_interpolate(m, opts)
    }
    fn lift_root(p: &Poly<Self>, z0: Complex64) -> Result<Self> {
        // B(z(x), x) = 0  =>  dz = -(dB/dx)(z0) / B'(z0)
        let zero = Complex64::new(0.0, 0.0);
        let mut slope = zero;
        let mut pow = Complex64::new(1.0, 0.0);
        let width = p.coeffs().iter().map(Dual::width).max().unwrap_or(0);
        let mut dbdx = vec![zero; width];
        for (d, c) in p.coeffs().iter().enumerate() {
            for (acc, g) in dbdx.iter_mut().zip(&c.grad) {
                *acc += g * pow;
            }
            if d + 1 < p.coeffs().len() {
                slope += p.coeffs()[d + 1].re * pow * (d as f64 + 1.0);
            }
            pow *= z0;
        }
        if slope.norm() == 0.0 {
            return Err(Error::DegenerateRoots);
        }
        Ok(Dual {
            re: z0,
            grad: dbdx.into_iter().map(|g| -g / slope).collect(),
        })
    }
}
