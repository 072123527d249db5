//! Local Lax matrices, the gauge matrix Ω_n, the monodromy matrices T and
//! T̄, and spectral-curve extraction.

use crate::algebra::{char_poly, LaurentPoly, Mat, PolyMatrix, Scalar, SpectralCurve, NEGLIGIBLE};
use crate::error::{Error, Result};
use crate::lattice::{site, CanonicalState, LatticeConfig};

fn sign(k: usize) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

fn mono<S: Scalar>(n: usize, c: S, e: i64) -> LaurentPoly<S> {
    LaurentPoly::monomial(n as u32, c, e)
}

/// L̃_n = V^{-1/N} (ζ E_11 + (-1)^{N-1} V E_{1,N} + Σ E_{k+1,k}).
pub fn lax_tilde<S: Scalar>(n: usize, v: &S) -> Result<PolyMatrix<S>> {
    let pre = v.powf(-1.0 / n as f64)?;
    let mut m = PolyMatrix::zeros(n, n, n as u32);
    m.set(0, 0, mono(n, pre.clone(), 1));
    let corner = &mono(n, v.clone() * S::from_i64(sign(n - 1)), 0) + m.get(0, n - 1);
    m.set(0, n - 1, corner.scale(&pre));
    for k in 0..n - 1 {
        let e = &mono(n, pre.clone(), 0) + m.get(k + 1, k);
        m.set(k + 1, k, e);
    }
    Ok(m)
}

/// L_n = ζ (P E_11 + Q E_12 + z^{-1} (-1)^{N-1} Q^{-1} E_{N,1} + Σ_{k=2}^{N-1} E_{k,k+1}).
pub fn lax_local<S: Scalar>(n: usize, p: &S, q: &S) -> PolyMatrix<S> {
    let qi = q.inv().expect("Q is nonzero");
    let mut m = PolyMatrix::zeros(n, n, n as u32);
    m.set(0, 0, mono(n, p.clone(), 1));
    m.set(0, 1, mono(n, q.clone(), 1));
    let low = &mono(n, qi * S::from_i64(sign(n - 1)), 1 - n as i64) + m.get(n - 1, 0);
    m.set(n - 1, 0, low);
    for k in 1..n - 1 {
        m.set(k, k + 1, mono(n, S::one(), 1));
    }
    m
}

/// L̄_n = ζ^{-1} (Q^{-1} E_12 + Σ_{k=2}^{N-1} E_{k,k+1} + z (-1)^{N-1} Q E_{N,1} + z (-1)^{N-2} P E_{N,2}).
pub fn lax_bar<S: Scalar>(n: usize, p: &S, q: &S) -> PolyMatrix<S> {
    let qi = q.inv().expect("Q is nonzero");
    let mut m = PolyMatrix::zeros(n, n, n as u32);
    m.set(0, 1, mono(n, qi, -1));
    for k in 1..n - 1 {
        m.set(k, k + 1, mono(n, S::one(), -1));
    }
    let e = n as i64 - 1;
    let a = &mono(n, q.clone() * S::from_i64(sign(n - 1)), e) + m.get(n - 1, 0);
    m.set(n - 1, 0, a);
    let b = &mono(n, p.clone() * S::from_i64(sign(n)), e) + m.get(n - 1, 1);
    m.set(n - 1, 1, b);
    m
}

/// A = (Σ_k E_{k,N+1-k}) (Id - Σ_k E_{k,k+1}).
pub fn omega_a<S: Scalar>(n: usize) -> Mat<S> {
    let j = Mat::from_fn(n, n, |r, c| if r + c == n - 1 { S::one() } else { S::zero() });
    let u = Mat::from_fn(n, n, |r, c| {
        if r == c {
            S::one()
        } else if c == r + 1 {
            -S::one()
        } else {
            S::zero()
        }
    });
    &j * &u
}

/// Diagonal of B_n = ∏_{k=0}^{N-2} P_{n+k}^{-Σ_{j=k+2}^N D^(j)} Q_{n+k}^{D^(k+2)},
/// D^(j) = Id/N - E_jj, as elementwise powers.
pub fn omega_b<S: Scalar>(site_n: i64, s: &CanonicalState<S>) -> Result<Vec<S>> {
    let n = s.config.n;
    let inv_n = 1.0 / n as f64;
    let mut d = vec![S::one(); n];
    for k in 0..n - 1 {
        let p = site(&s.p, site_n + k as i64);
        let q = site(&s.q, site_n + k as i64);
        for (i, di) in d.iter_mut().enumerate() {
            // exponent of P: -Σ_{j=k+2}^{N} (1/N - δ_{ij}) (1-based j, i)
            let cnt = (n - k - 1) as f64;
            let hit = if i + 1 >= k + 2 { 1.0 } else { 0.0 };
            let ep = -(cnt * inv_n - hit);
            let eq = inv_n - if i + 1 == k + 2 { 1.0 } else { 0.0 };
            *di = di.clone() * p.powf(ep)? * q.powf(eq)?;
        }
    }
    Ok(d)
}

/// X(ζ) = diag(1, ζ, ..., ζ^{N-1}).
pub fn omega_x<S: Scalar>(n: usize) -> PolyMatrix<S> {
    PolyMatrix::from_fn(n, n, n as u32, |i, j| if i == j { mono(n, S::one(), i as i64) } else { LaurentPoly::zero(n as u32) })
}

/// Ω_n(ζ) = B_n A X(ζ).
pub fn omega<S: Scalar>(site_n: i64, s: &CanonicalState<S>) -> Result<PolyMatrix<S>> {
    let n = s.config.n;
    let b = Mat::diag(&omega_b(site_n, s)?);
    Ok(omega_x(n).mul_mat_left(&(&b * &omega_a(n))))
}

/// Ω_n(ζ)^{-1} = X(ζ)^{-1} A^{-1} B_n^{-1}.
pub fn omega_inverse<S: Scalar>(site_n: i64, s: &CanonicalState<S>) -> Result<PolyMatrix<S>> {
    let n = s.config.n;
    let b = omega_b(site_n, s)?;
    let binv = Mat::diag(&b.iter().map(|x| x.inv().ok_or(Error::SingularMatrix)).collect::<Result<Vec<_>>>()?);
    let ainv = omega_a::<S>(n).inverse()?;
    let xinv = PolyMatrix::from_fn(n, n, n as u32, |i, j| {
        if i == j {
            mono(n, S::one(), -(i as i64))
        } else {
            LaurentPoly::zero(n as u32)
        }
    });
    Ok(xinv.mul_mat_right(&(&ainv * &binv)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonodromyKind {
    T,
    Tbar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monodromy<S> {
    pub kind: MonodromyKind,
    /// Root order N; every exponent is a multiple of N.
    pub matrix: PolyMatrix<S>,
    pub config: LatticeConfig,
}

/// L_L ... L_1 (site L leftmost), with the collapse and degree checks.
pub fn monodromy<S: Scalar>(s: &CanonicalState<S>, kind: MonodromyKind) -> Result<Monodromy<S>> {
    let c = s.config;
    let mut t = PolyMatrix::identity(c.n, c.n as u32);
    for i in 0..c.l {
        let local = match kind {
            MonodromyKind::T => lax_local(c.n, &s.p[i], &s.q[i]),
            MonodromyKind::Tbar => lax_bar(c.n, &s.p[i], &s.q[i]),
        };
        t = &local * &t;
    }
    if !S::EXACT {
        t = t.cleaned(1.0);
    }
    if let Some(e) = t.fractional_exponent() {
        return Err(Error::CollapseFailure { exponent: e });
    }
    let m = Monodromy { kind, matrix: t, config: c };
    check_degree_structure(&m)?;
    Ok(m)
}

fn z_span<S: Scalar>(p: &LaurentPoly<S>) -> Option<(i64, i64)> {
    let n = p.root_order() as i64;
    Some((p.min_exponent()? / n, p.max_exponent()? / n))
}

/// Tbar = z T̄_- + T̄_0 + T̄_+: strictly lower = z·(deg <= M-1), diagonal
/// deg M except (1,1) of deg M-1, strictly upper deg <= M-1.
/// T = T_- + T_0 + z T_+: strictly upper = z·(deg <= M(N-1)-1), diagonal
/// deg M(N-1)-1 except (1,1) of deg M(N-1), strictly lower deg <= M(N-1)-1.
/// All entries polynomial in z.
pub fn check_degree_structure<S: Scalar>(m: &Monodromy<S>) -> Result<()> {
    let n = m.config.n;
    let mm = m.config.m as i64;
    let err = |i: usize, j: usize, what: &str| {
        Err(Error::DegreeStructure(format!("{:?} entry ({}, {}): {what}", m.kind, i + 1, j + 1)))
    };
    for i in 0..n {
        for j in 0..n {
            let span = z_span(m.matrix.get(i, j));
            if let Some((lo, _)) = span {
                if lo < 0 {
                    return err(i, j, "negative power of z");
                }
            }
            let deg = span.map(|s| s.1);
            let lo = span.map(|s| s.0);
            match m.kind {
                MonodromyKind::Tbar => {
                    if i > j {
                        if deg.is_some_and(|d| d > mm) || lo.is_some_and(|l| l < 1) {
                            return err(i, j, "expected z times a polynomial of degree <= M-1");
                        }
                    } else if i == j {
                        let want = if i == 0 { mm - 1 } else { mm };
                        if deg != Some(want) {
                            return err(i, j, &format!("degree {deg:?}, expected {want}"));
                        }
                    } else if deg.is_some_and(|d| d > mm - 1) {
                        return err(i, j, "degree exceeds M-1");
                    }
                }
                MonodromyKind::T => {
                    let top = mm * (n as i64 - 1);
                    if i == j {
                        let want = if i == 0 { top } else { top - 1 };
                        if deg != Some(want) {
                            return err(i, j, &format!("degree {deg:?}, expected {want}"));
                        }
                    } else if i < j {
                        if deg.is_some_and(|d| d > top) || lo.is_some_and(|l| l < 1) {
                            return err(i, j, "expected z times a polynomial of degree <= M(N-1)-1");
                        }
                    } else if deg.is_some_and(|d| d > top - 1) {
                        return err(i, j, "degree exceeds M(N-1)-1");
                    }
                }
            }
        }
    }
    Ok(())
}

/// Characteristic polynomial of T̄ with f_N ≡ 1 asserted.
pub fn spectral_curve<S: Scalar>(m: &Monodromy<S>) -> Result<SpectralCurve<S>> {
    if m.kind != MonodromyKind::Tbar {
        return Err(Error::InvalidState("spectral curve needs the Tbar monodromy".into()));
    }
    let c = m.config;
    let mut f = char_poly(&m.matrix)?;
    if !S::EXACT {
        let scale = f.iter().fold(0.0f64, |a, p| a.max(p.scale_hint()));
        f = f
            .into_iter()
            .map(|p| {
                crate::algebra::Poly::new(
                    p.coeffs()
                        .iter()
                        .map(|x| if x.is_negligible(scale) { S::zero() } else { x.clone() })
                        .collect(),
                )
            })
            .collect();
    }
    let fnn = &f[c.n - 1];
    let unit = fnn.degree() == Some(0) && {
        let d = fnn.coeff(0) - S::one();
        if S::EXACT {
            d.is_zero()
        } else {
            d.magnitude() <= 1e3 * NEGLIGIBLE
        }
    };
    if !unit {
        return Err(Error::DegreeStructure(format!("f_N is not identically 1: {:?}", fnn.coeffs())));
    }
    SpectralCurve::new(c.n, c.m, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{DetOptions, Rational};
    use crate::lattice::{make_config, random_canonical, CanonicalState};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(a: i64) -> Rational {
        Rational::from_i64(a)
    }

    #[test]
    fn local_matrices_n2() {
        let l = lax_local(2, &r(1), &r(1));
        let z0 = Complex64::new(2.0, 0.0);
        let m = l.map(|x| x.value()).eval(&z0);
        let want = [[2.0, 2.0], [-0.5, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.get(i, j) - Complex64::new(want[i][j], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn unimodular_local_matrices() {
        let opts = DetOptions::default();
        for n in 2..=4 {
            let l = lax_local(n, &r(2), &r(3));
            let lb = lax_bar(n, &r(2), &r(3));
            assert_eq!(l.det(&opts).unwrap(), LaurentPoly::constant(n as u32, r(1)));
            assert_eq!(lb.det(&opts).unwrap(), LaurentPoly::constant(n as u32, r(1)));
        }
    }

    #[test]
    fn tilde_examples() {
        let one = Complex64::new(1.0, 0.0);
        let t = lax_tilde(2, &one).unwrap();
        assert_eq!(t.get(0, 0).coeff(1), one);
        assert_eq!(t.get(0, 1).coeff(0), -one);
        assert_eq!(t.get(1, 0).coeff(0), one);
        let t = lax_tilde(3, &Complex64::new(8.0, 0.0)).unwrap();
        assert!((t.get(0, 0).coeff(1) - 0.5).norm() < 1e-15);
        assert!((t.get(0, 2).coeff(0) - 4.0).norm() < 1e-15);
        assert_eq!(lax_tilde(2, &r(1)), Err(Error::NeedsFloating));
    }

    #[test]
    fn smallest_lattice_tbar() {
        let cfg = make_config(2, 1).unwrap();
        let s = CanonicalState::new(cfg, vec![r(1); 2], vec![r(1); 2]).unwrap();
        let t = monodromy(&s, MonodromyKind::Tbar).unwrap();
        assert_eq!(t.matrix.det(&DetOptions::default()).unwrap(), LaurentPoly::constant(2, r(1)));
    }

    #[test]
    fn omega_unit_state() {
        let cfg = make_config(3, 1).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let s = CanonicalState::new(cfg, vec![one; 6], vec![one; 6]).unwrap();
        assert!(omega_b(1, &s).unwrap().iter().all(|x| (x - one).norm() < 1e-15));
        let o = omega(1, &s).unwrap();
        assert_eq!(o, omega_x(3).mul_mat_left(&omega_a(3)));
    }

    #[test]
    fn gauge_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=3 {
            let s = random_canonical(make_config(n, 1).unwrap(), 0.3, &mut rng);
            let v = crate::lattice::v_from_canonical(&s);
            let zeta = Complex64::new(0.7, 0.4);
            for site_n in 1..=s.config.l as i64 {
                let lhs = lax_local(n, site(&s.p, site_n), site(&s.q, site_n)).eval(&zeta);
                let rhs = &(&omega(site_n + 1, &s).unwrap() * &lax_tilde(n, site(&v.v, site_n)).unwrap())
                    * &omega_inverse(site_n, &s).unwrap();
                let d = &lhs - &rhs.eval(&zeta);
                assert!(d.max_abs() < 1e-12, "n = {n}, site {site_n}: {}", d.max_abs());
            }
        }
    }
}
