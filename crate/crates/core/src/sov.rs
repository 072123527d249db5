//! Separation of variables: B(z), its zero mode B_0, the separated points
//! (z_i, w_i) and the canonical bracket checks.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{roots, DetOptions, Mat, Poly, PolyMatrix, Scalar};
use crate::error::{DivisorDefect, Error, Result};
use crate::lattice::CanonicalState;
use crate::laxmono::{monodromy, spectral_curve, Monodromy, MonodromyKind};
use crate::poisson::bracket_values;

/// Det of the (N-1)×(N-1) matrix with rows b, bd, ..., bd^{N-2}, where
/// `t` is split as [[a, b], [c, d]] with a scalar. Returns B as a
/// polynomial in z.
pub fn stacked_b<S: Scalar>(t: &PolyMatrix<S>) -> Result<Poly<S>> {
    let n = t.rows();
    let t = if t.root_order() == 1 { t.clone() } else { t.collapse()? };
    let b = t.submatrix(0..1, 1..n);
    let d = t.submatrix(1..n, 1..n);
    let mut rows = vec![b];
    for _ in 0..n.saturating_sub(2) {
        let next = rows.last().expect("nonempty") * &d;
        rows.push(next);
    }
    let stack = PolyMatrix::vstack(&rows);
    let det = stack.det(&DetOptions::default())?;
    let p = det.to_z_poly()?;
    Ok(if S::EXACT { p } else { p.cleaned() })
}

/// B(z) and its leading coefficient B_0, with deg B = g asserted.
#[derive(Clone, Debug, PartialEq)]
pub struct BPolynomial<S> {
    pub b0: S,
    pub b: Poly<S>,
}

pub fn b_polynomial<S: Scalar>(m: &Monodromy<S>) -> Result<BPolynomial<S>> {
    if m.kind != MonodromyKind::Tbar {
        return Err(Error::InvalidState("B(z) is built from the Tbar monodromy".into()));
    }
    let b = stacked_b(&m.matrix)?;
    let Some(deg) = b.degree() else { return Err(Error::ZeroB) };
    if deg != m.config.genus {
        return Err(Error::DegreeMismatch { found: deg, expected: m.config.genus });
    }
    Ok(BPolynomial { b0: b.leading().expect("nonzero").clone(), b })
}

/// W(z) = Det(rows b, ..., bd^{N-3}, ξd) / Det(rows b, ..., bd^{N-3}, ξ),
/// ξ = (0, ..., 0, 1), for a numeric T̄(z).
pub fn w_ratio<S: Scalar>(t: &Mat<S>) -> Result<S> {
    let n = t.rows();
    let b = t.submatrix(0..1, 1..n);
    let d = t.submatrix(1..n, 1..n);
    if n == 2 {
        return Ok(d.get(0, 0).clone());
    }
    let mut rows = vec![b.row(0)];
    for _ in 0..n - 3 {
        let next = d.left_mul(rows.last().expect("nonempty"));
        rows.push(next);
    }
    let xi: Vec<S> = (0..n - 1).map(|i| if i == n - 2 { S::one() } else { S::zero() }).collect();
    let mut num = rows.clone();
    num.push(d.left_mul(&xi));
    let mut den = rows;
    den.push(xi);
    Mat::from_rows(num).det().checked_div(&Mat::from_rows(den).det()).ok_or(Error::SingularMatrix)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorOptions {
    /// Relative separation below which two zeros of B collide.
    pub root_tol: f64,
    /// Bound on |F(z_i, w_i)| relative to the curve's term scale.
    pub curve_tol: f64,
    /// Bound on |dF/dw| (relative) below which a point is a branch point.
    pub ramification_tol: f64,
}

impl Default for DivisorOptions {
    fn default() -> Self {
        DivisorOptions { root_tol: 1e-8, curve_tol: 1e-9, ramification_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisorPoint<S> {
    pub z: S,
    pub w: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Divisor<S> {
    pub points: Vec<DivisorPoint<S>>,
    pub b0: S,
    pub b: Poly<S>,
    /// Largest relative on-curve residual over the points.
    pub curve_residual: f64,
}

/// Separated points: z_i from roots(B), w_i from the determinant ratio.
/// Floating or dual scalars only (roots are not exact).
pub fn divisor<S: Scalar>(m: &Monodromy<S>, opts: &DivisorOptions) -> Result<Divisor<S>> {
    if S::EXACT {
        return Err(Error::NeedsFloating);
    }
    let bp = b_polynomial(m)?;
    let curve = spectral_curve(m)?.map(|c| c.value());
    let zs = if bp.b.degree() == Some(0) {
        Vec::new()
    } else {
        roots(&bp.b.map(|c| c.value()), opts.root_tol)?
    };
    if zs.iter().any(|r| r.multiple) {
        return Err(Error::DegenerateDivisor(DivisorDefect::RootCollision));
    }
    let mut points = Vec::with_capacity(zs.len());
    let mut worst = 0.0f64;
    for r in zs {
        let z = S::lift_root(&bp.b, r.z)?;
        let w = w_ratio(&m.matrix.eval_z(&z)?)?;
        let (zv, wv) = (z.value(), w.value());
        let scale = curve.residual_scale(zv, wv);
        let res = curve.eval(&zv, &wv).norm() / scale;
        if !(res < opts.curve_tol) {
            return Err(Error::OffCurve(res));
        }
        worst = worst.max(res);
        let slope = curve.dfdw(&zv, &wv).norm() * (1.0 + wv.norm()) / scale;
        if slope < opts.ramification_tol {
            return Err(Error::DegenerateDivisor(DivisorDefect::Ramification));
        }
        points.push(DivisorPoint { z, w });
    }
    Ok(Divisor { points, b0: bp.b0, b: bp.b, curve_residual: worst })
}

/// Convenience: the numeric divisor of a state.
pub fn divisor_of_state(s: &CanonicalState<Complex64>, opts: &DivisorOptions) -> Result<Divisor<Complex64>> {
    divisor(&monodromy(s, MonodromyKind::Tbar)?, opts)
}

/// Max absolute residuals of the separated-variable brackets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SovReport {
    /// {z_i, z_j}.
    pub zz: f64,
    /// {w_i, w_j}.
    pub ww: f64,
    /// {z_i, w_j} - 2 δ_ij z_i w_i.
    pub zw: f64,
    /// {B_0, z_i}.
    pub b0z: f64,
    /// {B_0, w_i} + B_0 w_i.
    pub b0w: f64,
    /// max relative |F(z_i, w_i)|.
    pub on_curve: f64,
}

pub fn check_separated_brackets(s: &CanonicalState<Complex64>, opts: &DivisorOptions) -> Result<SovReport> {
    let l = s.config.l;
    let div = divisor(&monodromy(&s.seeded(), MonodromyKind::Tbar)?, opts)?;
    let br = |a: &crate::algebra::Dual, b: &crate::algebra::Dual| bracket_values(a, b, l);
    let mut rep = SovReport { on_curve: div.curve_residual, ..Default::default() };
    let b0 = &div.b0;
    for (i, pi) in div.points.iter().enumerate() {
        for (j, pj) in div.points.iter().enumerate() {
            rep.zz = rep.zz.max(br(&pi.z, &pj.z).norm());
            rep.ww = rep.ww.max(br(&pi.w, &pj.w).norm());
            let want = if i == j { 2.0 * pi.z.re * pi.w.re } else { Complex64::new(0.0, 0.0) };
            rep.zw = rep.zw.max((br(&pi.z, &pj.w) - want).norm());
        }
        rep.b0z = rep.b0z.max(br(b0, &pi.z).norm());
        rep.b0w = rep.b0w.max((br(b0, &pi.w) + b0.re * pi.w.re).norm());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lift_to_canonical, make_config, random_canonical, LVState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn lifted(n: usize, m: usize, v: &[f64]) -> CanonicalState<Complex64> {
        let cfg = make_config(n, m).unwrap();
        let lv = LVState::new(cfg, v.iter().map(|&x| c(x)).collect()).unwrap();
        lift_to_canonical(&lv, &vec![c(1.0); n - 1]).unwrap()
    }

    #[test]
    fn n2_example_divisor() {
        let s = lifted(2, 2, &[1.0, 2.0, 6.0, 3.0]);
        let d = divisor_of_state(&s, &DivisorOptions::default()).unwrap();
        assert_eq!(d.points.len(), 1);
        assert!((d.points[0].z - c(3.0)).norm() < 1e-10);
        // w solves w^2 + (5/2) w + 1 = 0
        let w = d.points[0].w;
        assert!(((w - c(-2.0)).norm() < 1e-9) || ((w - c(-0.5)).norm() < 1e-9), "{w}");
    }

    #[test]
    fn n3_example_divisor() {
        let s = lifted(3, 1, &[1.0, 2.0, 4.0, 4.0, 2.0, 1.0]);
        let d = divisor_of_state(&s, &DivisorOptions::default()).unwrap();
        assert!((d.points[0].z - c(-27.0 / 5.0)).norm() < 1e-10);
    }

    #[test]
    fn genus_degree_on_random_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_canonical(make_config(3, 2).unwrap(), 0.4, &mut rng);
        let bp = b_polynomial(&monodromy(&s, MonodromyKind::Tbar).unwrap()).unwrap();
        assert_eq!(bp.b.degree(), Some(4));
    }

    #[test]
    fn all_equal_state_is_degenerate() {
        let s = lifted(3, 2, &[1.0; 12]);
        assert!(matches!(divisor_of_state(&s, &DivisorOptions::default()), Err(Error::DegenerateDivisor(_))));
    }

    #[test]
    fn separated_brackets_examples() {
        for s in [lifted(2, 2, &[1.0, 2.0, 6.0, 3.0]), lifted(3, 1, &[1.0, 2.0, 4.0, 4.0, 2.0, 1.0])] {
            let r = check_separated_brackets(&s, &DivisorOptions::default()).unwrap();
            assert!(r.zz < 1e-10 && r.ww < 1e-10, "{r:?}");
            assert!(r.zw < 1e-8 && r.b0z < 1e-8 && r.b0w < 1e-8, "{r:?}");
        }
    }
}
