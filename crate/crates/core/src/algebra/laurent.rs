//! Laurent polynomials in the root variable zeta, with zeta^N = z.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::poly::Poly;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// A finite sum of c_e zeta^e. `root_order` is N in zeta^N = z.
///
/// Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPoly<S> {
    root_order: u32,
    coeffs: BTreeMap<i64, S>,
}

impl<S: Scalar> LaurentPoly<S> {
    pub fn zero(root_order: u32) -> Self {
        assert!(root_order > 0, "root order must be positive");
        LaurentPoly { root_order, coeffs: BTreeMap::new() }
    }

    pub fn constant(root_order: u32, c: S) -> Self {
        Self::monomial(root_order, c, 0)
    }

    /// c zeta^exponent.
    pub fn monomial(root_order: u32, c: S, exponent: i64) -> Self {
        let mut p = Self::zero(root_order);
        if !c.is_zero() {
            p.coeffs.insert(exponent, c);
        }
        p
    }

    pub fn from_terms(root_order: u32, terms: impl IntoIterator<Item = (i64, S)>) -> Self {
        let mut p = Self::zero(root_order);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Embed a polynomial in z.
    pub fn from_z_poly(root_order: u32, p: &Poly<S>) -> Self {
        Self::from_terms(
            root_order,
            p.coeffs()
                .iter()
                .enumerate()
                .map(|(d, c)| (d as i64 * root_order as i64, c.clone())),
        )
    }

    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &S)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, exponent: i64) -> S {
        self.coeffs.get(&exponent).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    fn add_term(&mut self, e: i64, c: S) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.remove(&e) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.coeffs.insert(e, s);
                }
            }
            None => {
                self.coeffs.insert(e, c);
            }
        }
    }

    pub fn is_polynomial_in_z(&self) -> bool {
        let n = self.root_order as i64;
        self.coeffs.keys().all(|&e| e >= 0 && e % n == 0)
    }

    /// Dense z-coefficients; fails on exponents that are negative or not
    /// multiples of the root order.
    pub fn to_z_poly(&self) -> Result<Poly<S>> {
        let n = self.root_order as i64;
        if let Some((&e, _)) = self.coeffs.iter().find(|(&e, _)| e < 0 || e % n != 0) {
            return Err(Error::NotPolynomialInZ { exponent: e, root_order: self.root_order });
        }
        let deg = self.max_exponent().map_or(0, |e| (e / n) as usize + 1);
        let mut out = vec![S::zero(); deg];
        for (e, c) in &self.coeffs {
            out[(e / n) as usize] = c.clone();
        }
        Ok(Poly::new(out))
    }

    /// Reinterpret as a Laurent polynomial in z itself (root order 1) when
    /// every exponent is a multiple of N; negative powers of z allowed.
    pub fn collapse(&self) -> Result<LaurentPoly<S>> {
        let n = self.root_order as i64;
        let mut out = LaurentPoly::zero(1);
        for (&e, c) in &self.coeffs {
            if e % n != 0 {
                return Err(Error::NotPolynomialInZ { exponent: e, root_order: self.root_order });
            }
            out.coeffs.insert(e / n, c.clone());
        }
        Ok(out)
    }

    pub fn eval(&self, zeta: &S) -> S {
        let inv = zeta.inv();
        let mut acc = S::zero();
        for (&e, c) in &self.coeffs {
            let base = if e >= 0 {
                zeta.clone()
            } else {
                inv.clone().unwrap_or_else(|| S::from_f64(f64::NAN))
            };
            let mut p = S::one();
            for _ in 0..e.unsigned_abs() {
                p = p * base.clone();
            }
            acc = acc + c.clone() * p;
        }
        acc
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::from_terms(self.root_order, self.coeffs.iter().map(|(e, c)| (*e, c.clone() * s.clone())))
    }

    /// Multiply by zeta^k.
    pub fn shift(&self, k: i64) -> Self {
        LaurentPoly {
            root_order: self.root_order,
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LaurentPoly<T> {
        LaurentPoly::from_terms(self.root_order, self.coeffs.iter().map(|(e, c)| (*e, f(c))))
    }

    pub fn scale_hint(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.magnitude()))
    }

    /// Drop coefficients negligible relative to `scale`.
    pub fn cleaned(&self, scale: f64) -> Self {
        LaurentPoly {
            root_order: self.root_order,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(_, c)| !c.is_negligible(scale))
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Exact quotient `self / rhs`, `None` if the division leaves a
    /// remainder or `rhs` is zero. Intended for exact fields.
    pub fn exact_div(&self, rhs: &Self) -> Option<Self> {
        let (rlo, rhi) = (rhs.min_exponent()?, rhs.max_exponent()?);
        if self.is_zero() {
            return Some(self.clone());
        }
        let lead_inv = rhs.coeffs[&rhi].inv()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.root_order);
        let width = rhi - rlo;
        loop {
            let Some(hi) = rem.max_exponent() else { break };
            let lo = rem.min_exponent().unwrap();
            if hi - lo < width {
                return None;
            }
            let e = hi - rhi;
            let c = rem.coeffs[&hi].clone() * lead_inv.clone();
            let t = Self::monomial(self.root_order, c.clone(), e);
            rem = &rem - &(&t * rhs);
            quot.add_term(e, c);
        }
        Some(quot)
    }
}

impl<S: Scalar> Add for &LaurentPoly<S> {
    type Output = LaurentPoly<S>;
    fn add(self, rhs: &LaurentPoly<S>) -> LaurentPoly<S> {
        debug_assert_eq!(self.root_order, rhs.root_order);
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl<S: Scalar> Sub for &LaurentPoly<S> {
    type Output = LaurentPoly<S>;
    fn sub(self, rhs: &LaurentPoly<S>) -> LaurentPoly<S> {
        debug_assert_eq!(self.root_order, rhs.root_order);
        let mut out = self.clone();
        for (e, c) in &rhs.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl<S: Scalar> Neg for &LaurentPoly<S> {
    type Output = LaurentPoly<S>;
    fn neg(self) -> LaurentPoly<S> {
        LaurentPoly {
            root_order: self.root_order,
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

impl<S: Scalar> Mul for &LaurentPoly<S> {
    type Output = LaurentPoly<S>;
    fn mul(self, rhs: &LaurentPoly<S>) -> LaurentPoly<S> {
        debug_assert_eq!(self.root_order, rhs.root_order);
        let mut out = LaurentPoly::zero(self.root_order);
        for (ea, a) in &self.coeffs {
            for (eb, b) in &rhs.coeffs {
                out.add_term(ea + eb, a.clone() * b.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Rational;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn cancellation_leaves_no_zero_coefficients() {
        let a = LaurentPoly::from_terms(3, [(1, r(2)), (-2, r(1))]);
        let b = LaurentPoly::from_terms(3, [(1, r(-2))]);
        let s = &a + &b;
        assert_eq!(s.terms().count(), 1);
        assert_eq!(s.coeff(-2), r(1));
    }

    #[test]
    fn polynomial_in_z_predicate() {
        let p = LaurentPoly::from_terms(2, [(0, r(1)), (4, r(3))]);
        assert!(p.is_polynomial_in_z());
        assert_eq!(p.to_z_poly().unwrap().coeffs(), &[r(1), r(0), r(3)]);
        let q = LaurentPoly::from_terms(2, [(1, r(1))]);
        assert!(!q.is_polynomial_in_z());
        assert!(matches!(q.to_z_poly(), Err(Error::NotPolynomialInZ { exponent: 1, .. })));
        let neg = LaurentPoly::from_terms(2, [(-2, r(1))]);
        assert!(!neg.is_polynomial_in_z());
        assert_eq!(neg.collapse().unwrap().coeff(-1), r(1));
    }

    #[test]
    fn eval_with_negative_powers() {
        let p = LaurentPoly::from_terms(2, [(1, Complex64::new(1.0, 0.0)), (-1, Complex64::new(4.0, 0.0))]);
        let v = p.eval(&Complex64::new(2.0, 0.0));
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-15);
    }

    fn arb_laurent() -> impl Strategy<Value = LaurentPoly<Rational>> {
        proptest::collection::vec((-4i64..5, -5i64..6), 0..5)
            .prop_map(|t| LaurentPoly::from_terms(2, t.into_iter().map(|(e, c)| (e, r(c)))))
    }

    proptest! {
        #[test]
        fn exact_division_inverts_multiplication(a in arb_laurent(), b in arb_laurent()) {
            prop_assume!(!b.is_zero());
            let prod = &a * &b;
            prop_assert_eq!(prod.exact_div(&b).unwrap(), a);
        }

        #[test]
        fn ring_laws(a in arb_laurent(), b in arb_laurent(), c in arb_laurent()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }
    }
}
