//! Matrices of Laurent polynomials in zeta, their determinants and
//! characteristic polynomials.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::laurent::LaurentPoly;
use super::matrix::Mat;
use super::poly::Poly;
use super::scalar::{Scalar, NEGLIGIBLE};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix<S> {
    rows: usize,
    cols: usize,
    root_order: u32,
    entries: Vec<LaurentPoly<S>>,
}

/// Knobs for the floating-point determinant.
#[derive(Clone, Debug)]
pub struct DetOptions {
    /// Radius of the interpolation circle.
    pub radius: f64,
    /// Upper bound on the node-conditioning estimate.
    pub max_condition: f64,
    /// Coefficients below `clean_rel * max|coeff|` are dropped.
    pub clean_rel: f64,
}

impl Default for DetOptions {
    fn default() -> Self {
        DetOptions { radius: 1.0, max_condition: 1e8, clean_rel: NEGLIGIBLE }
    }
}

impl<S: Scalar> PolyMatrix<S> {
    pub fn zeros(rows: usize, cols: usize, root_order: u32) -> Self {
        PolyMatrix { rows, cols, root_order, entries: vec![LaurentPoly::zero(root_order); rows * cols] }
    }

    pub fn identity(n: usize, root_order: u32) -> Self {
        Self::from_fn(n, n, root_order, |i, j| {
            if i == j {
                LaurentPoly::constant(root_order, S::one())
            } else {
                LaurentPoly::zero(root_order)
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, root_order: u32, f: impl Fn(usize, usize) -> LaurentPoly<S>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert_eq!(e.root_order(), root_order, "entries must share the root order");
                entries.push(e);
            }
        }
        PolyMatrix { rows, cols, root_order, entries }
    }

    /// A constant matrix.
    pub fn from_mat(m: &Mat<S>, root_order: u32) -> Self {
        Self::from_fn(m.rows(), m.cols(), root_order, |i, j| LaurentPoly::constant(root_order, m.get(i, j).clone()))
    }

    /// Σ_e coeffs[e] zeta^e for the given (exponent, matrix) pairs.
    pub fn from_coefficients(root_order: u32, terms: &[(i64, Mat<S>)]) -> Self {
        let (rows, cols) = terms.first().map_or((0, 0), |(_, m)| (m.rows(), m.cols()));
        Self::from_fn(rows, cols, root_order, |i, j| {
            LaurentPoly::from_terms(root_order, terms.iter().map(|(e, m)| (*e, m.get(i, j).clone())))
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: LaurentPoly<S>) {
        assert_eq!(v.root_order(), self.root_order);
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[LaurentPoly<S>] {
        &self.entries
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyMatrix<T> {
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            root_order: self.root_order,
            entries: self.entries.iter().map(|e| e.map(&f)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.root_order, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), self.root_order, |i, j| {
            self.get(rows.start + i, cols.start + j).clone()
        })
    }

    /// Stack row blocks vertically.
    pub fn vstack(blocks: &[PolyMatrix<S>]) -> Self {
        let root_order = blocks[0].root_order;
        let cols = blocks[0].cols;
        let mut entries = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols);
            entries.extend(b.entries.iter().cloned());
            rows += b.rows;
        }
        PolyMatrix { rows, cols, root_order, entries }
    }

    pub fn scale(&self, s: &S) -> Self {
        PolyMatrix { entries: self.entries.iter().map(|e| e.scale(s)).collect(), ..self.clone() }
    }

    pub fn shift(&self, k: i64) -> Self {
        PolyMatrix { entries: self.entries.iter().map(|e| e.shift(k)).collect(), ..self.clone() }
    }

    pub fn trace(&self) -> LaurentPoly<S> {
        (0..self.rows.min(self.cols)).fold(LaurentPoly::zero(self.root_order), |acc, i| &acc + self.get(i, i))
    }

    pub fn is_polynomial_in_z(&self) -> bool {
        self.entries.iter().all(LaurentPoly::is_polynomial_in_z)
    }

    /// First zeta exponent not divisible by the root order, if any.
    pub fn fractional_exponent(&self) -> Option<i64> {
        let n = self.root_order as i64;
        self.entries.iter().flat_map(|e| e.terms().map(|(x, _)| x)).find(|x| x % n != 0)
    }

    /// Evaluate at a numeric zeta.
    pub fn eval(&self, zeta: &S) -> Mat<S> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(zeta))
    }

    /// Evaluate at z; entries must carry only exponents divisible by N.
    pub fn eval_z(&self, z: &S) -> Result<Mat<S>> {
        let collapsed: Vec<LaurentPoly<S>> =
            self.entries.iter().map(LaurentPoly::collapse).collect::<Result<_>>()?;
        Ok(Mat::from_fn(self.rows, self.cols, |i, j| collapsed[i * self.cols + j].eval(z)))
    }

    /// The same matrix with z itself as the variable (root order 1).
    pub fn collapse(&self) -> Result<Self> {
        let entries = self.entries.iter().map(LaurentPoly::collapse).collect::<Result<_>>()?;
        Ok(PolyMatrix { rows: self.rows, cols: self.cols, root_order: 1, entries })
    }

    /// Coefficient matrix of zeta^e.
    pub fn coefficient(&self, exponent: i64) -> Mat<S> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).coeff(exponent))
    }

    /// Coefficient matrix of z^d.
    pub fn z_coefficient(&self, d: i64) -> Mat<S> {
        self.coefficient(d * self.root_order as i64)
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.entries.iter().filter_map(LaurentPoly::max_exponent).max()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.entries.iter().filter_map(LaurentPoly::min_exponent).min()
    }

    /// z-degree of entry (i, j); `None` for a zero entry. Requires the
    /// polynomial-in-z predicate on that entry.
    pub fn z_degree(&self, i: usize, j: usize) -> Option<i64> {
        self.get(i, j).max_exponent().map(|e| e / self.root_order as i64)
    }

    pub fn scale_hint(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.scale_hint()))
    }

    /// Drop floating noise relative to the largest coefficient.
    pub fn cleaned(&self, rel_scale: f64) -> Self {
        let s = self.scale_hint() * rel_scale;
        PolyMatrix { entries: self.entries.iter().map(|e| e.cleaned(s)).collect(), ..self.clone() }
    }

    pub fn mul_mat_left(&self, m: &Mat<S>) -> Self {
        &PolyMatrix::from_mat(m, self.root_order) * self
    }

    pub fn mul_mat_right(&self, m: &Mat<S>) -> Self {
        self * &PolyMatrix::from_mat(m, self.root_order)
    }

    pub fn det(&self, opts: &DetOptions) -> Result<LaurentPoly<S>> {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        S::poly_det(self, opts)
    }
}

impl<S: Scalar> Mul for &PolyMatrix<S> {
    type Output = PolyMatrix<S>;
    fn mul(self, rhs: &PolyMatrix<S>) -> PolyMatrix<S> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        assert_eq!(self.root_order, rhs.root_order);
        PolyMatrix::from_fn(self.rows, rhs.cols, self.root_order, |i, j| {
            (0..self.cols).fold(LaurentPoly::zero(self.root_order), |acc, k| {
                let a = self.get(i, k);
                let b = rhs.get(k, j);
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    &acc + &(a * b)
                }
            })
        })
    }
}

impl<S: Scalar> Add for &PolyMatrix<S> {
    type Output = PolyMatrix<S>;
    fn add(self, rhs: &PolyMatrix<S>) -> PolyMatrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        PolyMatrix::from_fn(self.rows, self.cols, self.root_order, |i, j| self.get(i, j) + rhs.get(i, j))
    }
}

impl<S: Scalar> Sub for &PolyMatrix<S> {
    type Output = PolyMatrix<S>;
    fn sub(self, rhs: &PolyMatrix<S>) -> PolyMatrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        PolyMatrix::from_fn(self.rows, self.cols, self.root_order, |i, j| self.get(i, j) - rhs.get(i, j))
    }
}

/// Bareiss elimination over the Laurent ring; every division is exact.
pub fn det_fraction_free<S: Scalar>(m: &PolyMatrix<S>) -> Result<LaurentPoly<S>> {
    let n = m.dim();
    let ro = m.root_order();
    if n == 0 {
        return Ok(LaurentPoly::constant(ro, S::one()));
    }
    let mut a: Vec<Vec<LaurentPoly<S>>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j).clone()).collect()).collect();
    let mut negate = false;
    let mut prev = LaurentPoly::constant(ro, S::one());
    for k in 0..n - 1 {
        let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
            return Ok(LaurentPoly::zero(ro));
        };
        if p != k {
            a.swap(p, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[i][j] * &a[k][k]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = num
                    .exact_div(&prev)
                    .ok_or_else(|| Error::InvalidState("inexact fraction-free division".into()))?;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if negate { -&d } else { d })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Evaluation at points on a circle followed by an inverse DFT.
///
/// The exponent window comes from the tighter of the row and column
/// degree sums; when every exponent shares a common factor d the
/// interpolation runs in zeta^d.
pub fn det_interpolate<S: Scalar>(m: &PolyMatrix<S>, opts: &DetOptions) -> Result<LaurentPoly<S>> {
    let n = m.dim();
    let ro = m.root_order();
    if n == 0 {
        return Ok(LaurentPoly::constant(ro, S::one()));
    }
    let span = |it: &mut dyn Iterator<Item = &LaurentPoly<S>>| -> Option<(i64, i64)> {
        let mut lo = None::<i64>;
        let mut hi = None::<i64>;
        for e in it {
            if let (Some(a), Some(b)) = (e.min_exponent(), e.max_exponent()) {
                lo = Some(lo.map_or(a, |x| x.min(a)));
                hi = Some(hi.map_or(b, |x| x.max(b)));
            }
        }
        lo.zip(hi)
    };
    let (mut rlo, mut rhi, mut clo, mut chi) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        let Some((a, b)) = span(&mut (0..n).map(|j| m.get(i, j))) else {
            return Ok(LaurentPoly::zero(ro));
        };
        rlo += a;
        rhi += b;
        let Some((a, b)) = span(&mut (0..n).map(|j| m.get(j, i))) else {
            return Ok(LaurentPoly::zero(ro));
        };
        clo += a;
        chi += b;
    }
    let (lo, hi) = (rlo.max(clo), rhi.min(chi));
    if lo > hi {
        return Ok(LaurentPoly::zero(ro));
    }
    let step = m
        .entries()
        .iter()
        .flat_map(|e| e.terms().map(|(x, _)| x))
        .fold(0i64, gcd)
        .max(1);
    let (ulo, uhi) = (lo.div_euclid(step) + i64::from(lo.rem_euclid(step) != 0), hi.div_euclid(step));
    if ulo > uhi {
        return Ok(LaurentPoly::zero(ro));
    }
    let k = (uhi - ulo + 1) as usize;
    let rho = opts.radius;
    let estimate = rho.max(1.0 / rho).powi(k as i32 - 1);
    if estimate > opts.max_condition {
        return Err(Error::FloatingConditioning { estimate, bound: opts.max_condition });
    }
    // Entries as Laurent polynomials in u = zeta^step.
    let reduced: Vec<Vec<(i64, S)>> = m
        .entries()
        .iter()
        .map(|e| e.terms().map(|(x, c)| (x / step, c.clone())).collect())
        .collect();
    let tau = std::f64::consts::TAU;
    let mut acc: Vec<S> = vec![S::zero(); k];
    for node in 0..k {
        let u = Complex64::from_polar(rho, tau * node as f64 / k as f64);
        let mat = Mat::from_fn(n, n, |i, j| {
            reduced[i * n + j].iter().fold(S::zero(), |s, (x, c)| {
                s + c.clone() * S::from_complex(u.powi(*x as i32)).expect("floating mode")
            })
        });
        let d = mat.det() * S::from_complex(u.powi(-(ulo as i32))).expect("floating mode");
        // a_{ulo+j} rho^j = (1/K) sum_node omega^{-j node} d_node
        for (j, slot) in acc.iter_mut().enumerate() {
            let tw = Complex64::from_polar(1.0, -tau * (j * node) as f64 / k as f64);
            *slot = slot.clone() + d.clone() * S::from_complex(tw).expect("floating mode");
        }
    }
    let norm = 1.0 / k as f64;
    let coeffs: Vec<(i64, S)> = acc
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let s = norm * rho.powi(-(j as i32));
            ((ulo + j as i64) * step, c * S::from_f64(s))
        })
        .collect();
    let out = LaurentPoly::from_terms(ro, coeffs);
    let scale = out.scale_hint() * opts.clean_rel / NEGLIGIBLE;
    Ok(out.cleaned(scale))
}

/// Characteristic coefficients f_1..f_N with
/// Det(w - m) = Σ_k (-1)^k f_k w^{N-k}, f_0 = 1 (Faddeev–LeVerrier).
pub fn char_poly<S: Scalar>(m: &PolyMatrix<S>) -> Result<Vec<Poly<S>>> {
    if let Some(e) = m.fractional_exponent() {
        return Err(Error::NotPolynomialInZ { exponent: e, root_order: m.root_order() });
    }
    let n = m.dim();
    let ro = m.root_order();
    // c_{n-k} for k = 1..n, with Det(w - m) = Σ c_i w^i
    let mut c: Vec<LaurentPoly<S>> = Vec::with_capacity(n);
    let mut mk = PolyMatrix::zeros(n, n, ro);
    let mut prev_c = LaurentPoly::constant(ro, S::one());
    for k in 1..=n {
        // M_k = m M_{k-1} + c_{n-k+1} Id,  c_{n-k} = -tr(m M_k) / k
        mk = &(m * &mk) + &scalar_identity(n, &prev_c);
        let tr = (m * &mk).trace();
        let inv_k = S::from_i64(k as i64).inv().expect("nonzero integer");
        let ck = (-&tr).scale(&inv_k);
        c.push(ck.clone());
        prev_c = ck;
    }
    c.iter()
        .enumerate()
        .map(|(i, ck)| {
            let k = i + 1;
            let f = if k % 2 == 1 { -ck } else { ck.clone() };
            f.to_z_poly()
        })
        .collect()
}

fn scalar_identity<S: Scalar>(n: usize, c: &LaurentPoly<S>) -> PolyMatrix<S> {
    let ro = c.root_order();
    PolyMatrix::from_fn(n, n, ro, |i, j| if i == j { c.clone() } else { LaurentPoly::zero(ro) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    fn lp(ro: u32, t: &[(i64, i64)]) -> LaurentPoly<Rational> {
        LaurentPoly::from_terms(ro, t.iter().map(|&(e, c)| (e, r(c))))
    }

    #[test]
    fn triangular_det() {
        let m = PolyMatrix::from_fn(2, 2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => lp(2, &[(2, 1)]),
            (0, 1) => lp(2, &[(0, 1)]),
            _ => LaurentPoly::zero(2),
        });
        let d = m.det(&DetOptions::default()).unwrap();
        assert_eq!(d, lp(2, &[(4, 1)]));
        let f = m.map(|x| x.value());
        let df = f.det(&DetOptions::default()).unwrap();
        assert_eq!(df.terms().count(), 1);
        assert!((df.coeff(4) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn identity_char_poly() {
        let m: PolyMatrix<Rational> = PolyMatrix::identity(3, 1);
        let f = char_poly(&m).unwrap();
        let want = [3, 3, 1];
        for (fk, w) in f.iter().zip(want) {
            assert_eq!(fk.coeffs(), &[r(w)]);
        }
    }

    #[test]
    fn diagonal_char_poly() {
        let m = PolyMatrix::from_fn(2, 2, 1, |i, j| match (i, j) {
            (0, 0) => lp(1, &[(1, 1)]),
            (1, 1) => lp(1, &[(0, 2)]),
            _ => LaurentPoly::zero(1),
        });
        let f = char_poly(&m).unwrap();
        assert_eq!(f[0].coeffs(), &[r(2), r(1)]);
        assert_eq!(f[1].coeffs(), &[r(0), r(2)]);
    }

    #[test]
    fn char_poly_rejects_fractional_powers() {
        let m = PolyMatrix::from_fn(2, 2, 2, |i, j| if i == j { lp(2, &[(1, 1)]) } else { LaurentPoly::zero(2) });
        assert!(matches!(char_poly(&m), Err(Error::NotPolynomialInZ { exponent: 1, root_order: 2 })));
    }

    #[test]
    fn negative_exponents_interpolate() {
        let m = PolyMatrix::from_fn(2, 2, 3, |i, j| match (i, j) {
            (0, 0) => lp(3, &[(-3, 2), (3, 1)]),
            (0, 1) => lp(3, &[(0, 1)]),
            (1, 0) => lp(3, &[(-6, 1)]),
            _ => lp(3, &[(3, 1), (0, -1)]),
        });
        let exact = m.det(&DetOptions::default()).unwrap();
        let float = m.map(|x| x.value()).det(&DetOptions::default()).unwrap();
        for (e, c) in exact.terms() {
            assert!((float.coeff(e) - c.value()).norm() < 1e-13, "exponent {e}");
        }
        assert_eq!(float.terms().count(), exact.terms().count());
    }

    #[test]
    fn conditioning_guard() {
        let m = PolyMatrix::from_fn(1, 1, 1, |_, _| lp(1, &[(0, 1), (1, 1), (40, 1)]));
        let opts = DetOptions { radius: 2.0, ..Default::default() };
        assert!(matches!(
            m.map(|x| x.value()).det(&opts),
            Err(Error::FloatingConditioning { .. })
        ));
    }
}
