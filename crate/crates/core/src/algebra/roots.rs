//! Polynomial roots: companion-matrix eigenvalues, then Newton polishing.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly::Poly;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub z: Complex64,
    /// Another root lies within tol·(1+|z|).
    pub multiple: bool,
}

fn newton_polish(p: &Poly<Complex64>, dp: &Poly<Complex64>, mut z: Complex64) -> Complex64 {
    let mut best = p.eval(&z).norm();
    for _ in 0..50 {
        let d = dp.eval(&z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - p.eval(&z) / d;
        let r = p.eval(&next).norm();
        if !(r < best) {
            break;
        }
        let moved = (next - z).norm();
        z = next;
        best = r;
        if moved <= 1e-17 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// All complex roots of `p`, sorted by (real, imaginary) part.
pub fn roots(p: &Poly<Complex64>, tol: f64) -> Result<Vec<Root>> {
    let n = match p.degree() {
        Some(d) if d >= 1 => d,
        _ => return Err(Error::ConstantPolynomial),
    };
    let lead = *p.leading().expect("nonzero");
    let monic: Vec<Complex64> = p.coeffs().iter().map(|c| c / lead).collect();
    let mut comp = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -monic[i];
    }
    let eig = if n == 1 {
        vec![-monic[0]]
    } else {
        nalgebra::linalg::Schur::new(comp)
            .eigenvalues()
            .ok_or(Error::ConstantPolynomial)?
            .iter()
            .copied()
            .collect()
    };
    let dp = p.derivative();
    let mut zs: Vec<Complex64> = eig.into_iter().map(|z| newton_polish(p, &dp, z)).collect();

    let real_coeffs = p.coeffs().iter().all(|c| c.im.abs() <= 1e-14 * p.scale_hint());
    if real_coeffs {
        symmetrize_conjugates(&mut zs);
    }
    zs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let flags: Vec<bool> = (0..zs.len())
        .map(|i| {
            (0..zs.len()).any(|j| j != i && (zs[i] - zs[j]).norm() < tol * (1.0 + zs[i].norm()))
        })
        .collect();
    Ok(zs.into_iter().zip(flags).map(|(z, multiple)| Root { z, multiple }).collect())
}

/// Roots that must all be simple.
pub fn roots_simple(p: &Poly<Complex64>, tol: f64) -> Result<Vec<Complex64>> {
    let rs = roots(p, tol)?;
    if rs.iter().any(|r| r.multiple) {
        return Err(Error::DegenerateRoots);
    }
    Ok(rs.into_iter().map(|r| r.z).collect())
}

/// Snap near-real roots to the real axis and pair up conjugates exactly so
/// the sort order is reproducible.
fn symmetrize_conjugates(zs: &mut [Complex64]) {
    let n = zs.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        if zs[i].im.abs() <= 1e-12 * (1.0 + zs[i].norm()) {
            zs[i].im = 0.0;
            used[i] = true;
            continue;
        }
        let target = zs[i].conj();
        let partner = (0..n)
            .filter(|&j| j != i && !used[j])
            .min_by(|&a, &b| (zs[a] - target).norm().total_cmp(&(zs[b] - target).norm()));
        if let Some(j) = partner {
            let re = 0.5 * (zs[i].re + zs[j].re);
            let im = 0.5 * (zs[i].im.abs() + zs[j].im.abs());
            zs[i] = Complex64::new(re, im.copysign(zs[i].im));
            zs[j] = zs[i].conj();
            used[j] = true;
        }
        used[i] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn factored_quadratic() {
        let p = Poly::new(vec![c(2.0), c(-3.0), c(1.0)]);
        let r = roots_simple(&p, 1e-8).unwrap();
        assert!((r[0] - c(1.0)).norm() < 1e-14);
        assert!((r[1] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn double_root_is_flagged() {
        let p = Poly::new(vec![c(1.0), c(-2.0), c(1.0)]);
        assert!(roots(&p, 1e-6).unwrap().iter().all(|r| r.multiple));
        assert_eq!(roots_simple(&p, 1e-6), Err(Error::DegenerateRoots));
    }

    #[test]
    fn constant_rejected() {
        assert_eq!(roots(&Poly::new(vec![c(3.0)]), 1e-8), Err(Error::ConstantPolynomial));
    }

    #[test]
    fn conjugate_pair_order() {
        let p = Poly::new(vec![c(5.0), c(-2.0), c(1.0)]);
        let r = roots_simple(&p, 1e-8).unwrap();
        assert_eq!(r[0], r[1].conj());
        assert!(r[0].im < 0.0);
    }

    #[test]
    fn well_separated_roots_recovered() {
        let rs = [-2.5, -1.0, -0.25, 0.5, 1.75, 3.0];
        let p = Poly::from_roots(&rs.iter().map(|&x| c(x)).collect::<Vec<_>>());
        for (g, want) in roots_simple(&p, 1e-9).unwrap().iter().zip(rs) {
            assert!((g - c(want)).norm() < 1e-10);
        }
    }

    proptest! {
        // Separation down to 1e-3 makes the rounded coefficients themselves
        // move the roots by more than 1e-10, so the bound carries the
        // standard root condition number.
        #[test]
        fn construct_from_roots_round_trip(mut rs in proptest::collection::vec(-3.0f64..3.0, 6)) {
            rs.sort_by(f64::total_cmp);
            prop_assume!(rs.windows(2).all(|w| w[1] - w[0] > 1e-3));
            let p = Poly::from_roots(&rs.iter().map(|&x| c(x)).collect::<Vec<_>>());
            let dp = p.derivative();
            let got = roots_simple(&p, 1e-9).unwrap();
            for (g, want) in got.iter().zip(&rs) {
                let z = c(*want);
                let kappa: f64 = p.coeffs().iter().enumerate().map(|(k, a)| a.norm() * want.abs().powi(k as i32)).sum::<f64>()
                    / dp.eval(&z).norm();
                prop_assert!((g - z).norm() < 1e-10 + 64.0 * f64::EPSILON * kappa, "{} vs {}", g, want);
            }
        }
    }
}
