//! Spectral curves w^N - f_1(z) w^{N-1} + ... + (-1)^N f_N(z) = 0.

use num_complex::Complex64;

use super::poly::Poly;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurve<S> {
    pub n: usize,
    pub m: usize,
    /// f_1 .. f_N.
    pub f: Vec<Poly<S>>,
    pub genus: usize,
}

pub fn genus(n: usize, m: usize) -> usize {
    (n - 1) * (m * n - 2) / 2
}

impl<S: Scalar> SpectralCurve<S> {
    /// Checks deg f_k <= kM and f_N^(0) = 0.
    pub fn new(n: usize, m: usize, f: Vec<Poly<S>>) -> Result<Self> {
        if f.len() != n {
            return Err(Error::DegreeStructure(format!("{} coefficient polynomials for N = {n}", f.len())));
        }
        for (i, fk) in f.iter().enumerate() {
            let k = i + 1;
            if let Some(d) = fk.degree() {
                if d > k * m {
                    return Err(Error::DegreeStructure(format!("deg f_{k} = {d} > {}", k * m)));
                }
            }
        }
        let top = f[n - 1].coeff(n * m);
        if !top.is_negligible(f[n - 1].scale_hint()) {
            return Err(Error::DegreeStructure("f_N^(0) is nonzero".into()));
        }
        Ok(SpectralCurve { n, m, f, genus: genus(n, m) })
    }

    /// f_k^(j), the coefficient of z^{kM-j} in f_k (k is 1-based).
    pub fn coeff(&self, k: usize, j: usize) -> S {
        match (k * self.m).checked_sub(j) {
            Some(d) => self.f[k - 1].coeff(d),
            None => S::zero(),
        }
    }

    /// (k, j) labels of the nontrivial integrals, in order: k ascending
    /// over 1..N-1, then j = 1..kM-1.
    pub fn hamiltonian_labels(&self) -> Vec<(usize, usize)> {
        (1..self.n)
            .flat_map(|k| (1..k * self.m).map(move |j| (k, j)))
            .collect()
    }

    pub fn hamiltonians(&self) -> Vec<S> {
        self.hamiltonian_labels().into_iter().map(|(k, j)| self.coeff(k, j)).collect()
    }

    /// f_1(z) .. f_N(z).
    pub fn eval_f(&self, z: &S) -> Vec<S> {
        self.f.iter().map(|p| p.eval(z)).collect()
    }

    /// F(z, w) = Σ_k (-1)^k f_k(z) w^{N-k}, f_0 = 1.
    pub fn eval(&self, z: &S, w: &S) -> S {
        let fs = self.eval_f(z);
        let mut acc = S::one();
        for (i, fk) in fs.into_iter().enumerate() {
            let term = if i % 2 == 0 { -fk } else { fk };
            acc = acc * w.clone() + term;
        }
        acc
    }

    /// dF/dw at (z, w).
    pub fn dfdw(&self, z: &S, w: &S) -> S {
        let fs = self.eval_f(z);
        let n = self.n;
        let mut acc = S::from_i64(n as i64);
        for (i, fk) in fs.into_iter().take(n - 1).enumerate() {
            let k = i + 1;
            let c = S::from_i64((n - k) as i64) * if k % 2 == 1 { -fk } else { fk };
            acc = acc * w.clone() + c;
        }
        acc
    }

    /// Scale used to make |F(z, w)| relative: 1 + max_k |f_k(z)| |w|^{N-k}.
    pub fn residual_scale(&self, z: Complex64, w: Complex64) -> f64 {
        let fz: Vec<f64> = self.f.iter().map(|p| p.map(|c| c.value()).eval(&z).norm()).collect();
        let mut s = w.norm().powi(self.n as i32);
        for (i, v) in fz.iter().enumerate() {
            s = s.max(v * w.norm().powi((self.n - i - 1) as i32));
        }
        1.0 + s
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SpectralCurve<T> {
        SpectralCurve { n: self.n, m: self.m, f: self.f.iter().map(|p| p.map(&f)).collect(), genus: self.genus }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn labels_count_matches_genus() {
        for n in 2..=5 {
            for m in 1..=4 {
                let f = (1..=n).map(|_| Poly::zero()).collect();
                let c: SpectralCurve<Rational> = SpectralCurve::new(n, m, f).unwrap();
                assert_eq!(c.hamiltonian_labels().len(), c.genus, "N={n} M={m}");
            }
        }
    }

    #[test]
    fn evaluates_characteristic_form() {
        // w^2 - (z + 2) w + 2z = (w - z)(w - 2)
        let c = SpectralCurve::new(2, 1, vec![Poly::new(vec![r(2), r(1)]), Poly::new(vec![r(0), r(2)])]);
        // deg f_2 = 1 <= 2 and f_2^(0) (z^2 coefficient) = 0
        let c = c.unwrap();
        assert_eq!(c.eval(&r(5), &r(5)), r(0));
        assert_eq!(c.eval(&r(5), &r(2)), r(0));
        assert_eq!(c.dfdw(&r(5), &r(2)), r(2 * 2 - 7));
        assert_eq!(c.coeff(1, 0), r(1));
        assert_eq!(c.coeff(2, 1), r(2));
    }

    #[test]
    fn rejects_excess_degree() {
        let f = vec![Poly::new(vec![r(0), r(0), r(1)]), Poly::constant(r(1))];
        assert!(matches!(SpectralCurve::new(2, 1, f), Err(Error::DegreeStructure(_))));
    }
}
