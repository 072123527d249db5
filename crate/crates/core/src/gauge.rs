//! The gauge matrix S built from the z-expansion of T̄, the representative
//! M_F(z) = S T̄(z) S^{-1}, and the zero-mode cancellation B_F = ±B/B_0.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{char_poly, roots, Mat, Poly, PolyMatrix, Scalar};
use crate::error::{Error, Result};
use crate::lattice::{chain_products, chain_products_prime, lift_to_canonical, make_config, site, LVState};
use crate::laxmono::{monodromy, omega_a, omega_b, Monodromy, MonodromyKind};
use crate::sov::{b_polynomial, stacked_b};

/// Relative threshold for structural zeros of floating representatives.
const STRUCTURAL_REL: f64 = 1e-9;

fn near_zero<S: Scalar>(x: &S, scale: f64) -> bool {
    if S::EXACT {
        x.is_zero()
    } else {
        x.magnitude() <= STRUCTURAL_REL * scale.max(1.0)
    }
}

/// (-1)^{(N-1)(N-2)/2}.
pub fn zero_mode_sign(n: usize) -> i64 {
    if ((n - 1) * (n - 2) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// μ_j = coefficient of z^{M-j} in T̄ (j = 0..M) and ν = first row of μ_1.
pub fn mu_nu<S: Scalar>(m: &Monodromy<S>) -> Result<(Vec<Mat<S>>, Vec<S>)> {
    if m.kind != MonodromyKind::Tbar {
        return Err(Error::InvalidState("the gauge construction needs the Tbar monodromy".into()));
    }
    let mm = m.config.m as i64;
    let mu: Vec<Mat<S>> = (0..=mm).map(|j| m.matrix.z_coefficient(mm - j)).collect();
    let nu = mu[1].row(0);
    Ok((mu, nu))
}

/// S with rows (e_1, ν μ_0^{N-2}, ..., ν μ_0, ν) and m^(1..N).
pub fn build_s<S: Scalar>(mu: &[Mat<S>], nu: &[S]) -> Result<(Mat<S>, Vec<S>)> {
    let n = nu.len();
    let mu0 = &mu[0];
    let mut tail = vec![nu.to_vec()];
    for _ in 0..n - 2 {
        let next = mu0.left_mul(tail.last().expect("nonempty"));
        tail.push(next);
    }
    let mut rows = vec![(0..n).map(|i| if i == 0 { S::one() } else { S::zero() }).collect::<Vec<_>>()];
    rows.extend(tail.into_iter().rev());
    let s = Mat::from_rows(rows);
    let det = s.det();
    if S::EXACT {
        if det.is_zero() {
            return Err(Error::SingularS(0.0));
        }
    } else {
        let hadamard: f64 = (0..n)
            .map(|i| s.row(i).iter().map(|x| x.value().norm_sqr()).sum::<f64>().sqrt())
            .product();
        if det.value().norm() < 1e-12 * hadamard {
            return Err(Error::SingularS(det.value().norm()));
        }
    }
    Ok((s, m_coefficients(mu0, nu)))
}

/// m^(1) = (-1)^N Det(ν; e_2 μ_0; ...; e_N μ_0) and
/// z^{N-1} - Σ_{k>=2} m^(k) z^{N-k} = ∏_{k>=2} (z - (μ_0)_kk).
pub fn m_coefficients<S: Scalar>(mu0: &Mat<S>, nu: &[S]) -> Vec<S> {
    let n = nu.len();
    let mut rows = vec![nu.to_vec()];
    rows.extend((1..n).map(|k| mu0.row(k)));
    let sign = S::from_i64(if n % 2 == 0 { 1 } else { -1 });
    let mut out = vec![sign * Mat::from_rows(rows).det()];
    let diag: Vec<S> = (1..n).map(|k| mu0.get(k, k).clone()).collect();
    let p = Poly::from_roots(&diag);
    for k in 2..=n {
        out.push(-p.coeff(n - k));
    }
    out
}

/// U = Σ_k m^(k) E_{2,k} + Σ_{k>=3} E_{k,k-1}.
pub fn leading_u<S: Scalar>(mcoeffs: &[S]) -> Mat<S> {
    let n = mcoeffs.len();
    let mut u = Mat::zeros(n, n);
    for (k, mk) in mcoeffs.iter().enumerate() {
        u.set(1, k, mk.clone());
    }
    for k in 2..n {
        u.set(k, k - 1, S::one());
    }
    u
}

#[derive(Clone, Debug, PartialEq)]
pub struct Representative<S> {
    /// M_F(z), with z as the variable.
    pub mf: PolyMatrix<S>,
    pub s: Mat<S>,
    pub mu: Vec<Mat<S>>,
    pub nu: Vec<S>,
    pub mcoeffs: Vec<S>,
    pub m: usize,
}

/// M_F = S T̄ S^{-1} with the leading structure, row-1 structure and
/// characteristic polynomial checked.
pub fn representative<S: Scalar>(m: &Monodromy<S>) -> Result<Representative<S>> {
    let (mu, nu) = mu_nu(m)?;
    let (s, mcoeffs) = build_s(&mu, &nu)?;
    let sinv = s.inverse().map_err(|_| Error::SingularS(0.0))?;
    let tbar = m.matrix.collapse()?;
    let mut mf = tbar.mul_mat_left(&s).mul_mat_right(&sinv);
    if !S::EXACT {
        mf = mf.cleaned(1.0);
    }
    let r = Representative { mf, s, mu, nu, mcoeffs, m: m.config.m };
    check_representative(&r, &tbar)?;
    Ok(r)
}

fn check_representative<S: Scalar>(r: &Representative<S>, tbar: &PolyMatrix<S>) -> Result<()> {
    let n = r.nu.len();
    let mm = r.m as i64;
    let scale = r.mf.scale_hint();
    let bad = |what: String| Err(Error::Representative(what));
    if r.mf.min_exponent().is_some_and(|e| e < 0) {
        return bad("negative power of z".into());
    }
    let top = r.mf.max_exponent().unwrap_or(0);
    for d in mm + 1..=top {
        if !r.mf.z_coefficient(d).entries().iter().all(|x| near_zero(x, scale)) {
            return bad(format!("nonzero z^{d} coefficient above degree M"));
        }
    }
    let u = leading_u(&r.mcoeffs);
    let lead = r.mf.z_coefficient(mm);
    for i in 0..n {
        for j in 0..n {
            if !near_zero(&(lead.get(i, j).clone() - u.get(i, j).clone()), scale) {
                return bad(format!("leading coefficient differs from U at ({}, {})", i + 1, j + 1));
            }
        }
    }
    // Row 1: (M_F)_{1,N} monic of degree M-1; (M_F)_{1,i<N} of degree <= M-2.
    for j in 0..n {
        let e = r.mf.get(0, j);
        for d in (mm - 1).max(0)..=mm {
            let c = e.coeff(d);
            let want = if j == n - 1 && d == mm - 1 { S::one() } else { S::zero() };
            if !near_zero(&(c - want), scale) {
                return bad(format!("row-1 entry ({}, {}) has the wrong z^{d} coefficient", 1, j + 1));
            }
        }
    }
    let a = char_poly(&r.mf)?;
    let b = char_poly(tbar)?;
    // Coefficients of different f_k mix in the Faddeev-LeVerrier
    // recursion, so the comparison uses one scale for all of them.
    let fs = a.iter().chain(&b).fold(0.0f64, |m, p| m.max(p.scale_hint()));
    for (k, (fa, fb)) in a.iter().zip(&b).enumerate() {
        let len = fa.coeffs().len().max(fb.coeffs().len());
        for d in 0..len {
            let diff = fa.coeff(d) - fb.coeff(d);
            if !near_zero(&diff, fs) {
                return bad(format!(
                    "char_poly coefficient f_{} z^{d} differs from Tbar by {:e} (scale {fs:e})",
                    k + 1,
                    diff.magnitude()
                ));
            }
        }
    }
    Ok(())
}

/// B_F from the block split of M_F.
pub fn b_f_polynomial<S: Scalar>(r: &Representative<S>) -> Result<Poly<S>> {
    stacked_b(&r.mf)
}

/// Residuals of B_F = σ B/B_0 and Det s_2 = σ B_0, σ = (-1)^{(N-1)(N-2)/2}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ZeroModeReport {
    /// Max coefficientwise relative error of B_F against σ B / B_0.
    pub bf_relative: f64,
    /// |Det s_2 - σ B_0| / |B_0|.
    pub det_s2_relative: f64,
}

pub fn check_zero_mode<S: Scalar>(m: &Monodromy<S>) -> Result<ZeroModeReport> {
    let n = m.config.n;
    let bp = b_polynomial(m)?;
    let r = representative(m)?;
    let bf = b_f_polynomial(&r)?;
    let sigma = S::from_i64(zero_mode_sign(n));
    let b0inv = bp.b0.inv().ok_or(Error::ZeroB)?;
    let want = bp.b.scale(&(sigma.clone() * b0inv));
    let ws = want.scale_hint().max(1e-300);
    let len = want.coeffs().len().max(bf.coeffs().len());
    let bf_relative = (0..len)
        .map(|d| (bf.coeff(d) - want.coeff(d)).value().norm() / ws)
        .fold(0.0, f64::max);
    let s2 = r.s.submatrix(1..n, 1..n).det();
    let det_s2_relative = (s2 - sigma * bp.b0.clone()).value().norm() / bp.b0.value().norm();
    Ok(ZeroModeReport { bf_relative, det_s2_relative })
}

/// Parameters of the two solved examples.
#[derive(Clone, Debug, PartialEq)]
pub enum SolvedParams {
    /// N = 2, M = 2: V_1..V_4 with V_1 V_3 = V_2 V_4.
    N2 { v: [f64; 4] },
    /// N = 3, M = 1 from free (V_1, V_2, 𝒫).
    N3 { v1: f64, v2: f64, p: f64 },
    /// N = 3, M = 1 from a full V vector, checked against the sector.
    N3V { v: [f64; 6] },
}

/// V = (V_1, V_2, 𝒫^{1/2} V_2/V_1, 𝒫/V_1, 𝒫/V_2, 𝒫/V_3).
pub fn n3_sector_state(v1: f64, v2: f64, p: f64) -> [f64; 6] {
    let v3 = p.sqrt() * v2 / v1;
    [v1, v2, v3, p / v1, p / v2, p / v3]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolvedReport {
    pub n: usize,
    pub v: Vec<f64>,
    /// Closed-form zero of B_F.
    pub z_closed: f64,
    /// The computed zero of B_F.
    pub z_computed: [f64; 2],
    pub z_error: f64,
    /// N = 2: max |S - closed form|.
    pub s_closed_error: Option<f64>,
    /// Largest proportionality defect of the closed-form S̃ pattern: the whole
    /// matrix for N = 2, columns 2..N row by row for N = 3.
    pub stilde_pattern_residual: f64,
    /// N = 3: proportionality defect of full rows including column 1.
    pub stilde_column1_mismatch: Option<f64>,
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Defect of a ∝ b: max |a_i b_j - a_j b_i| / (|a| |b|).
fn proportionality_defect(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for j in 0..a.len() {
            worst = worst.max((a[i] * b[j] - a[j] * b[i]).norm());
        }
    }
    worst / (na * nb).max(1e-300)
}

/// Checks the closed-form zero of B_F and the closed-form S̃ patterns.
pub fn solved_example_check(params: &SolvedParams) -> Result<SolvedReport> {
    let (n, m, v): (usize, usize, Vec<f64>) = match params {
        SolvedParams::N2 { v } => (2, 2, v.to_vec()),
        SolvedParams::N3 { v1, v2, p } => (3, 1, n3_sector_state(*v1, *v2, *p).to_vec()),
        SolvedParams::N3V { v } => (3, 1, v.to_vec()),
    };
    let cfg = make_config(n, m)?;
    let lv = LVState::new(cfg, v.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    let pprime: Vec<f64> = chain_products_prime(&lv).iter().map(|c| c.re).collect();
    let pchain: Vec<f64> = chain_products(&lv).iter().map(|c| c.re).collect();
    let pcal = pprime[0];
    if !pprime.iter().all(|&x| rel_eq(x, pcal)) {
        return Err(Error::SectorViolation(format!("P'_k = {pprime:?} are not all equal")));
    }
    if n == 3 && !pchain.iter().all(|&x| rel_eq(x, pcal.powf(1.5))) {
        return Err(Error::SectorViolation(format!("P_k = {pchain:?} differ from P'^(3/2) = {}", pcal.powf(1.5))));
    }
    let z_closed = if n == 2 {
        v[0] + v[1]
    } else {
        let sp = pcal.sqrt();
        -(v[0] + v[1]) * (v[2] * v[3] / (sp * (v[2] + v[3]) + pcal) + 1.0)
    };

    let state = lift_to_canonical(&lv, &vec![Complex64::new(1.0, 0.0); n - 1])?;
    let mono = monodromy(&state, MonodromyKind::Tbar)?;
    let rep = representative(&mono)?;
    let bf = b_f_polynomial(&rep)?;
    let zs = roots(&bf, 1e-8)?;
    let z = zs
        .iter()
        .map(|r| r.z)
        .min_by(|a, b| (a - z_closed).norm().total_cmp(&(b - z_closed).norm()))
        .ok_or(Error::ConstantPolynomial)?;

    // S̃ = S B_1^{-1} A^{-T}.
    let b1 = omega_b(1, &state)?;
    let b1inv = Mat::diag(&b1.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    let a_inv_t = omega_a::<Complex64>(n).inverse()?.transpose();
    let stilde = &(&rep.s * &b1inv) * &a_inv_t;
    let l = cfg.l as i64;
    let p0 = v.iter().product::<f64>().powf(-1.0 / n as f64);
    let c = |x: f64| Complex64::new(x, 0.0);

    let (s_closed_error, pattern, col1) = if n == 2 {
        let vl = *site(&v, l);
        let pl = site(&state.p, l).re;
        let ql = site(&state.q, l).re;
        let closed = Mat::from_rows(vec![vec![c(1.0), c(0.0)], vec![c(-p0 * vl), c(p0 / (pl * ql))]]);
        let err = (&rep.s - &closed).max_abs();
        let reference = [c(1.0), c(1.0), c(0.0), c(-p0 * vl)];
        (Some(err), proportionality_defect(stilde.entries(), &reference), None)
    } else {
        let (v5, v6) = (v[4], v[5]);
        let (pi, pis) = (1.0 / pcal, 1.0 / pcal.sqrt());
        let reference = [
            [c(0.0), c(1.0), c(1.0)],
            [c(pi * (v5 + v6) + 2.0 * pis), c(pi * v6), c(-pi * (v5 + v6) - 2.0 * pis)],
            [c(-1.0), c(-pis * v6), c(1.0)],
        ];
        let mut pattern = 0.0f64;
        let mut col1 = 0.0f64;
        for (i, pr) in reference.iter().enumerate() {
            let row = stilde.row(i);
            pattern = pattern.max(proportionality_defect(&row[1..], &pr[1..]));
            col1 = col1.max(proportionality_defect(&row, pr));
        }
        (None, pattern, Some(col1))
    };
    Ok(SolvedReport {
        n,
        v,
        z_closed,
        z_computed: [z.re, z.im],
        z_error: (z - z_closed).norm(),
        s_closed_error,
        stilde_pattern_residual: pattern,
        stilde_column1_mismatch: col1,
    })
}

/// Coefficient inventory of the M_F shape: (free slots, curve constraints).
/// Row 1 carries N(M-1) free coefficients (the (1,N) entry is monic of
/// degree M-1), rows 2..N carry N(N-1)M below the fixed leading U, plus the
/// N values m^(k); the curve fixes Σ_k kM coefficients of f_1..f_N plus
/// the N-1 leading f_k^(0), k < N.
pub fn dimension_count(n: usize, m: usize) -> (usize, usize) {
    let free = n * (m - 1) + n * (n - 1) * m + n;
    let constraints = (1..=n).map(|k| k * m).sum::<usize>() + (n - 1);
    (free, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{genus, Rational};
    use crate::lattice::{random_canonical, random_rational_canonical};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn n2_s_shape() {
        let mu = vec![Mat::<Rational>::identity(2), Mat::identity(2)];
        let nu = vec![Rational::from_i64(3), Rational::from_i64(5)];
        let (s, _) = build_s(&mu, &nu).unwrap();
        assert_eq!(s, Mat::from_rows(vec![vec![Rational::from_i64(1), Rational::from_i64(0)], nu.clone()]));
        assert_eq!(s.det(), Rational::from_i64(5));
    }

    #[test]
    fn mu_reassembles_tbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_rational_canonical(make_config(3, 2).unwrap(), &mut rng);
        let t = monodromy(&s, MonodromyKind::Tbar).unwrap();
        let (mu, _) = mu_nu(&t).unwrap();
        let terms: Vec<(i64, Mat<Rational>)> = mu.iter().enumerate().map(|(j, c)| ((2 - j as i64), c.clone())).collect();
        assert_eq!(PolyMatrix::from_coefficients(1, &terms), t.matrix.collapse().unwrap());
        assert!(mu[0].get(0, 0).is_zero());
    }

    #[test]
    fn exact_representative_on_rational_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, m) in [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1)] {
            let s = random_rational_canonical(make_config(n, m).unwrap(), &mut rng);
            let t = monodromy(&s, MonodromyKind::Tbar).unwrap();
            let r = representative(&t).unwrap();
            let lead = r.mf.z_coefficient(m as i64);
            assert_eq!(lead, leading_u(&r.mcoeffs));
        }
    }

    #[test]
    fn zero_mode_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, m) in [(2, 2), (3, 1), (3, 2), (4, 1)] {
            let s = random_canonical(make_config(n, m).unwrap(), 0.3, &mut rng);
            let z = check_zero_mode(&monodromy(&s, MonodromyKind::Tbar).unwrap()).unwrap();
            assert!(z.bf_relative < 1e-10 && z.det_s2_relative < 1e-10, "{n} {m} {z:?}");
        }
    }

    #[test]
    fn solved_examples() {
        let r2 = solved_example_check(&SolvedParams::N2 { v: [1.0, 2.0, 6.0, 3.0] }).unwrap();
        assert!(r2.z_error < 1e-10, "{r2:?}");
        assert!(r2.s_closed_error.unwrap() < 1e-10);
        assert!(r2.stilde_pattern_residual < 1e-10);
        let r3 = solved_example_check(&SolvedParams::N3 { v1: 1.0, v2: 2.0, p: 4.0 }).unwrap();
        assert_eq!(r3.v, vec![1.0, 2.0, 4.0, 4.0, 2.0, 1.0]);
        assert!((r3.z_closed + 27.0 / 5.0).abs() < 1e-14);
        assert!(r3.z_error < 1e-10, "{r3:?}");
        assert!(r3.stilde_pattern_residual < 1e-10, "{r3:?}");
    }

    #[test]
    fn out_of_sector_rejected() {
        let r = solved_example_check(&SolvedParams::N2 { v: [1.0, 2.0, 3.0, 4.0] });
        assert!(matches!(r, Err(Error::SectorViolation(_))));
    }

    #[test]
    fn dimension_count_is_genus() {
        for (n, m) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1), (4, 2)] {
            let (free, cons) = dimension_count(n, m);
            assert_eq!(free - cons, genus(n, m), "{n} {m}");
        }
    }
}
