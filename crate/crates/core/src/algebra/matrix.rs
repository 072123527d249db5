//! Dense matrices over a [`Scalar`] field.

use std::ops::{Add, Mul, Sub};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Row-major dense matrix; may be rectangular.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn diag(d: &[S]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { S::zero() })
    }

    /// The matrix unit E_{i,j} (0-based).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.set(i, j, S::one());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| {
                v.iter()
                    .enumerate()
                    .fold(S::zero(), |acc, (i, x)| acc + x.clone() * self.get(i, j).clone())
            })
            .collect()
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows.start + i, cols.start + j).clone())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(self.rows), |acc, _| &acc * self)
    }

    /// Kronecker product, indexed ((a,c),(b,d)) -> self[a,b]·rhs[c,d].
    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self.get(i / rhs.rows, j / rhs.cols).clone() * rhs.get(i % rhs.rows, j % rhs.cols).clone()
        })
    }

    /// [self, rhs].
    pub fn commutator(&self, rhs: &Self) -> Self {
        &(self * rhs) - &(rhs * self)
    }

    /// Largest entry modulus of the primal values.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.pivot_size()))
    }

    fn pivot_row(&self, k: usize, from: usize) -> Option<usize> {
        if S::EXACT {
            (from..self.rows).find(|&r| !self.get(r, k).is_zero())
        } else {
            let best = (from..self.rows).max_by(|&a, &b| {
                self.get(a, k).pivot_size().total_cmp(&self.get(b, k).pivot_size())
            })?;
            (self.get(best, k).pivot_size() > 0.0).then_some(best)
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Determinant by Gaussian elimination (partial pivoting in floating mode).
    pub fn det(&self) -> S {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for k in 0..n {
            let Some(p) = a.pivot_row(k, k) else { return S::zero() };
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let piv = a.get(k, k).clone();
            let inv = piv.inv().expect("pivot is nonzero");
            det = det * piv;
            for i in k + 1..n {
                let f = a.get(i, k).clone() * inv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a.get(i, j).clone() - f.clone() * a.get(k, j).clone();
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    /// Gauss–Jordan inverse.
    pub fn inverse(&self) -> Result<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = a.pivot_row(k, k).ok_or(Error::SingularMatrix)?;
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let pinv = a.get(k, k).inv().ok_or(Error::SingularMatrix)?;
            for j in 0..n {
                a.set(k, j, a.get(k, j).clone() * pinv.clone());
                inv.set(k, j, inv.get(k, j).clone() * pinv.clone());
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a.get(i, k).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    a.set(i, j, a.get(i, j).clone() - f.clone() * a.get(k, j).clone());
                    inv.set(i, j, inv.get(i, j).clone() - f.clone() * inv.get(k, j).clone());
                }
            }
        }
        Ok(inv)
    }
}

impl<S: Scalar> Mul for &Mat<S> {
    type Output = Mat<S>;
    fn mul(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        Mat::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(S::zero(), |acc, k| acc + self.get(i, k).clone() * rhs.get(k, j).clone())
        })
    }
}

impl<S: Scalar> Add for &Mat<S> {
    type Output = Mat<S>;
    fn add(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() + rhs.get(i, j).clone())
    }
}

impl<S: Scalar> Sub for &Mat<S> {
    type Output = Mat<S>;
    fn sub(self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() - rhs.get(i, j).clone())
    }
}
