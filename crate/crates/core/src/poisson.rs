//! Poisson brackets in the log coordinates (p_n, q_n) = (log P_n, log Q_n),
//! the classical r-matrix, and residual checks of the bracket identities.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Dual, Mat, PolyMatrix, Scalar, SpectralCurve};
use crate::error::{Error, Result};
use crate::gauge::representative;
use crate::lattice::{invariants, v_from_canonical, CanonicalState};
use crate::laxmono::{lax_bar, lax_local, monodromy, spectral_curve, MonodromyKind};

/// A differentiable functional of the canonical state.
pub trait Observable: Fn(&CanonicalState<Dual>) -> Result<Dual> + Sync {}
impl<F: Fn(&CanonicalState<Dual>) -> Result<Dual> + Sync> Observable for F {}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// {a, b} from gradients over (p_1..p_L, q_1..q_L).
pub fn bracket_values(a: &Dual, b: &Dual, l: usize) -> Complex64 {
    (0..l).fold(czero(), |acc, n| acc + a.d(n) * b.d(l + n) - a.d(l + n) * b.d(n))
}

/// {f, g} = Σ_n (∂f/∂p_n ∂g/∂q_n - ∂f/∂q_n ∂g/∂p_n) at `s`.
pub fn bracket(f: &impl Observable, g: &impl Observable, s: &CanonicalState<Complex64>) -> Result<Complex64> {
    let sd = s.seeded();
    Ok(bracket_values(&f(&sd)?, &g(&sd)?, s.config.l))
}

/// {A ⊗, B} with index ((a,c),(b,d)) holding {A_ab, B_cd}.
pub fn tensor_bracket(a: &Mat<Dual>, b: &Mat<Dual>, l: usize) -> Mat<Complex64> {
    let n = a.rows();
    Mat::from_fn(n * n, n * n, |r, c| bracket_values(a.get(r / n, c / n), b.get(r % n, c % n), l))
}

/// Matrix of brackets {x, B_cd}.
pub fn scalar_matrix_bracket(x: &Dual, b: &Mat<Dual>, l: usize) -> Mat<Complex64> {
    Mat::from_fn(b.rows(), b.cols(), |i, j| bracket_values(x, b.get(i, j), l))
}

/// Which r-matrix to use; `FlippedSign` is a deliberately wrong variant for
/// negative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RVariant {
    #[default]
    Standard,
    /// Negates the lower off-diagonal terms 2/(x-1) E_kj ⊗ E_jk.
    FlippedSign,
}

/// N²×N² r-matrix at x = z/z'.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix<S> {
    pub n: usize,
    pub m: Mat<S>,
}

impl<S: Scalar> RMatrix<S> {
    /// Transpose in the first and second space at once.
    pub fn t1t2(&self) -> Self {
        RMatrix { n: self.n, m: self.m.transpose() }
    }

    /// Transpose in the second space only.
    pub fn t2(&self) -> Self {
        let n = self.n;
        RMatrix {
            n,
            m: Mat::from_fn(n * n, n * n, |r, c| {
                let (a, cc, b, d) = (r / n, r % n, c / n, c % n);
                self.m.get(a * n + d, b * n + cc).clone()
            }),
        }
    }

    pub fn neg(&self) -> Self {
        RMatrix { n: self.n, m: self.m.map(|x| -x.clone()) }
    }
}

/// r(x) = Σ_k (x+1)/(x-1) E_kk⊗E_kk + Σ_{j<k} 2/(x-1) (E_kj⊗E_jk + x E_jk⊗E_kj).
pub fn r_matrix<S: Scalar>(n: usize, x: &S) -> Result<RMatrix<S>> {
    r_matrix_variant(n, x, RVariant::Standard)
}

pub fn r_matrix_variant<S: Scalar>(n: usize, x: &S, variant: RVariant) -> Result<RMatrix<S>> {
    let inv = (x.clone() - S::one()).inv().ok_or(Error::PoleAtOne)?;
    let diag = (x.clone() + S::one()) * inv.clone();
    let two = S::from_i64(2) * inv;
    let lower = match variant {
        RVariant::Standard => two.clone(),
        RVariant::FlippedSign => -two.clone(),
    };
    let upper = two * x.clone();
    let mut m = Mat::zeros(n * n, n * n);
    let idx = |a: usize, b: usize| a * n + b;
    for k in 0..n {
        m.set(idx(k, k), idx(k, k), diag.clone());
        for j in 0..k {
            // E_kj ⊗ E_jk: ((k, j), (j, k))
            m.set(idx(k, j), idx(j, k), lower.clone());
            // E_jk ⊗ E_kj: ((j, k), (k, j))
            m.set(idx(j, k), idx(k, j), upper.clone());
        }
    }
    Ok(RMatrix { n, m })
}

fn principal_root(z: Complex64, n: usize) -> Complex64 {
    z.powf(1.0 / n as f64)
}

fn residual(lhs: &Mat<Complex64>, r: &Mat<Complex64>, ab: &Mat<Complex64>) -> f64 {
    (lhs - &r.commutator(ab)).max_abs()
}

/// Max absolute residuals of the three quadratic relations
/// {A⊗A} = [r(z/z'), A⊗A], {Ā⊗Ā} = [-r(z'/z), Ā⊗Ā],
/// {A⊗Ā} = [-r^{T2}(z/z'), A⊗Ā].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RelationReport {
    pub plain: f64,
    pub bar: f64,
    pub mixed: f64,
    /// Largest |[r, A⊗B]| entry seen, for scale.
    pub scale: f64,
}

impl RelationReport {
    pub fn max(&self) -> f64 {
        self.plain.max(self.bar).max(self.mixed)
    }

    fn merge(self, o: Self) -> Self {
        RelationReport {
            plain: self.plain.max(o.plain),
            bar: self.bar.max(o.bar),
            mixed: self.mixed.max(o.mixed),
            scale: self.scale.max(o.scale),
        }
    }
}

fn relation_residuals(
    a_z: &Mat<Dual>,
    a_zp: &Mat<Dual>,
    b_z: &Mat<Dual>,
    b_zp: &Mat<Dual>,
    z: Complex64,
    zp: Complex64,
    l: usize,
    variant: RVariant,
) -> Result<RelationReport> {
    let n = a_z.rows();
    let val = |m: &Mat<Dual>| m.map(|x| x.value());
    let r = r_matrix_variant(n, &(z / zp), variant)?;
    let rbar = r_matrix_variant(n, &(zp / z), variant)?.neg();
    let rmix = r.t2().neg();
    let aa = val(a_z).kron(&val(a_zp));
    let bb = val(b_z).kron(&val(b_zp));
    let ab = val(a_z).kron(&val(b_zp));
    let scale = [r.m.commutator(&aa), rbar.m.commutator(&bb), rmix.m.commutator(&ab)]
        .iter()
        .fold(0.0f64, |s, m| s.max(m.max_abs()));
    Ok(RelationReport {
        plain: residual(&tensor_bracket(a_z, a_zp, l), &r.m, &aa),
        bar: residual(&tensor_bracket(b_z, b_zp, l), &rbar.m, &bb),
        mixed: residual(&tensor_bracket(a_z, b_zp, l), &rmix.m, &ab),
        scale,
    })
}

/// Local relations at site `n` (1-based) with the principal N-th roots of
/// z and z'. Floating mode only: brackets are taken with dual numbers.
pub fn check_local_relations(
    s: &CanonicalState<Complex64>,
    n: usize,
    z: Complex64,
    zp: Complex64,
    variant: RVariant,
) -> Result<RelationReport> {
    let c = s.config;
    if n == 0 || n > c.l {
        return Err(Error::InvalidState(format!("site {n} outside 1..={}", c.l)));
    }
    let sd = s.seeded();
    let (p, q) = (&sd.p[n - 1], &sd.q[n - 1]);
    let (zeta, zetap) = (Dual::constant(principal_root(z, c.n)), Dual::constant(principal_root(zp, c.n)));
    let lax = lax_local(c.n, p, q);
    let bar = lax_bar(c.n, p, q);
    relation_residuals(&lax.eval(&zeta), &lax.eval(&zetap), &bar.eval(&zeta), &bar.eval(&zetap), z, zp, c.l, variant)
}

/// Max |bracket| between every entry of L_n, L̄_n at site n and every
/// entry of L_m, L̄_m at site m ≠ n.
pub fn check_locality(s: &CanonicalState<Complex64>, n: usize, m: usize, z: Complex64, zp: Complex64) -> f64 {
    let c = s.config;
    let sd = s.seeded();
    let (zeta, zetap) = (Dual::constant(principal_root(z, c.n)), Dual::constant(principal_root(zp, c.n)));
    let at = |k: usize, zz: &Dual| {
        [
            lax_local(c.n, &sd.p[k - 1], &sd.q[k - 1]).eval(zz),
            lax_bar(c.n, &sd.p[k - 1], &sd.q[k - 1]).eval(zz),
        ]
    };
    let mut worst = 0.0f64;
    for a in at(n, &zeta).iter() {
        for b in at(m, &zetap).iter() {
            worst = worst.max(tensor_bracket(a, b, c.l).max_abs());
        }
    }
    worst
}

/// Monodromy report: the three relations for T, T̄ plus {Tr T(z), Tr T(z')}.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MonodromyReport {
    pub relations: RelationReport,
    pub trace: f64,
}

/// Dual-valued T and T̄ with z as the variable.
fn dual_monodromies(s: &CanonicalState<Complex64>) -> Result<(PolyMatrix<Dual>, PolyMatrix<Dual>)> {
    let sd = s.seeded();
    let t = monodromy(&sd, MonodromyKind::T)?.matrix.collapse()?;
    let tb = monodromy(&sd, MonodromyKind::Tbar)?.matrix.collapse()?;
    Ok((t, tb))
}

/// All relations over a list of (z, z') pairs, evaluated concurrently.
pub fn check_monodromy_relations_grid(
    s: &CanonicalState<Complex64>,
    grid: &[(Complex64, Complex64)],
    variant: RVariant,
) -> Result<MonodromyReport> {
    let l = s.config.l;
    let (t, tb) = dual_monodromies(s)?;
    let reports: Vec<MonodromyReport> = grid
        .par_iter()
        .map(|&(z, zp)| {
            let ev = |m: &PolyMatrix<Dual>, x: Complex64| m.eval_z(&Dual::constant(x));
            let (tz, tzp, bz, bzp) = (ev(&t, z)?, ev(&t, zp)?, ev(&tb, z)?, ev(&tb, zp)?);
            let relations = relation_residuals(&tz, &tzp, &bz, &bzp, z, zp, l, variant)?;
            let trace = bracket_values(&tz.trace(), &tzp.trace(), l).norm();
            Ok(MonodromyReport { relations, trace })
        })
        .collect::<Result<_>>()?;
    Ok(reports.into_iter().fold(MonodromyReport::default(), |a, b| MonodromyReport {
        relations: a.relations.merge(b.relations),
        trace: a.trace.max(b.trace),
    }))
}

pub fn check_monodromy_relations(
    s: &CanonicalState<Complex64>,
    z: Complex64,
    zp: Complex64,
    variant: RVariant,
) -> Result<MonodromyReport> {
    check_monodromy_relations_grid(s, &[(z, zp)], variant)
}

/// Deterministic 5×5 grid of (z, z') pairs: distinct radius sets keep
/// z ≠ z', seeded phases keep the points off the real axis.
pub fn spectral_grid(seed: u64) -> Vec<(Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rz = [0.55, 0.8, 1.05, 1.3, 1.6];
    let rzp = [0.65, 0.9, 1.2, 1.45, 1.8];
    let zs: Vec<Complex64> = rz.iter().map(|&r| Complex64::from_polar(r, rng.gen_range(-0.6..0.6))).collect();
    let zps: Vec<Complex64> = rzp.iter().map(|&r| Complex64::from_polar(r, rng.gen_range(-0.6..0.6))).collect();
    zs.iter().flat_map(|&z| zps.iter().map(move |&zp| (z, zp))).collect()
}

/// Max residual per centrality family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CenterReport {
    /// {Det T̄(z), T̄(z')}.
    pub a: f64,
    /// {f_k^(0), M_F(z)} and {f_k^(kM), M_F(z)}.
    pub b: f64,
    /// {t_k^(j), T̄(z')} - k [Δ, T̄(z')].
    pub c: f64,
    /// {t_k^(j), S} + k (S - E_11) Δ.
    pub d: f64,
    /// {𝓗_i, 𝓗_j}.
    pub hamiltonians: f64,
}

impl CenterReport {
    pub fn families_max(&self) -> f64 {
        self.a.max(self.b).max(self.c).max(self.d)
    }
}

/// t_k^(j): coefficient of z^{kM-j} in Tr T̄(z)^k.
fn trace_power_coefficients(tb: &PolyMatrix<Dual>, k: usize) -> crate::algebra::LaurentPoly<Dual> {
    let mut acc = tb.clone();
    for _ in 1..k {
        acc = &acc * tb;
    }
    acc.trace()
}

/// Centrality families (a)-(d) and the Hamiltonian commutation at the
/// sample points `zs`.
///
/// The j = kM generator is Δ = -(diag(μ_M)^k - (μ_M)_11^k Id); the j = 0
/// generator is (K^(0))^k with K^(0) = diag(0, (μ_0)_22, ..., (μ_0)_NN).
pub fn check_center(s: &CanonicalState<Complex64>, zs: &[Complex64]) -> Result<CenterReport> {
    let c = s.config;
    let (n, mm, l) = (c.n, c.m, c.l);
    let sd = s.seeded();
    let mono = monodromy(&sd, MonodromyKind::Tbar)?;
    let tb = mono.matrix.collapse()?;
    let curve = spectral_curve(&mono)?;
    let rep = representative(&mono)?;
    let mu0: Vec<Complex64> = (0..n).map(|k| rep.mu[0].get(k, k).value()).collect();
    let mum: Vec<Complex64> = (0..n).map(|k| rep.mu[mm].get(k, k).value()).collect();
    let dscale = mu0.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    if mu0[1..].iter().any(|x| x.norm() <= 1e-12 * dscale.max(1.0)) {
        return Err(Error::InvalidState("degenerate state: a diagonal entry of mu_0 vanishes".into()));
    }
    let ev = |m: &PolyMatrix<Dual>, z: Complex64| m.eval_z(&Dual::constant(z));
    let tb_at: Vec<Mat<Dual>> = zs.iter().map(|&z| ev(&tb, z)).collect::<Result<_>>()?;
    let mf_at: Vec<Mat<Dual>> = zs.iter().map(|&z| ev(&rep.mf, z)).collect::<Result<_>>()?;
    let mut rep_out = CenterReport::default();

    for m in &tb_at {
        for mp in &tb_at {
            rep_out.a = rep_out.a.max(scalar_matrix_bracket(&m.det(), mp, l).max_abs());
        }
    }
    for k in 1..n {
        for j in [0, k * mm] {
            let f = curve.coeff(k, j);
            for m in &mf_at {
                rep_out.b = rep_out.b.max(scalar_matrix_bracket(&f, m, l).max_abs());
            }
        }
    }
    let smat = rep.s.map(|x| x.value());
    let e11 = Mat::unit(n, 0, 0);
    for k in 1..n {
        let tr = trace_power_coefficients(&tb, k);
        let kk = Complex64::new(k as f64, 0.0);
        let pk = |x: Complex64| x.powi(k as i32);
        let gen0: Vec<Complex64> = (0..n).map(|i| if i == 0 { czero() } else { pk(mu0[i]) }).collect();
        let gen_m: Vec<Complex64> = (0..n).map(|i| -(pk(mum[i]) - pk(mum[0]))).collect();
        for (j, gen) in [(0, gen0), (k * mm, gen_m)] {
            let delta = Mat::diag(&gen);
            let t = tr.coeff((k * mm - j) as i64);
            for m in &tb_at {
                let mv = m.map(|x| x.value());
                let lhs = scalar_matrix_bracket(&t, m, l);
                let rhs = delta.commutator(&mv).scale(&kk);
                rep_out.c = rep_out.c.max((&lhs - &rhs).max_abs());
            }
            let lhs = scalar_matrix_bracket(&t, &rep.s, l);
            let rhs = (&(&smat - &e11) * &delta).scale(&-kk);
            rep_out.d = rep_out.d.max((&lhs - &rhs).max_abs());
        }
    }
    rep_out.hamiltonians = hamiltonian_commutators(&curve, l);
    Ok(rep_out)
}

fn hamiltonian_commutators(curve: &SpectralCurve<Dual>, l: usize) -> f64 {
    let hs = curve.hamiltonians();
    let mut worst = 0.0f64;
    for a in &hs {
        for b in &hs {
            worst = worst.max(bracket_values(a, b, l).norm());
        }
    }
    worst
}

/// Max |{𝓗_i, 𝓗_j}| over all pairs.
pub fn check_hamiltonians_commute(s: &CanonicalState<Complex64>) -> Result<f64> {
    let curve = spectral_curve(&monodromy(&s.seeded(), MonodromyKind::Tbar)?)?;
    Ok(hamiltonian_commutators(&curve, s.config.l))
}

/// Max |{I, V_n}| over every invariant I and every site n.
pub fn check_casimirs(s: &CanonicalState<Complex64>) -> Result<f64> {
    let sd = s.seeded();
    let v = v_from_canonical(&sd);
    let inv = invariants(&v)?;
    let mut worst = 0.0f64;
    for i in inv.to_vec().iter().take(inv.to_vec().len() - 1) {
        for vn in &v.v {
            worst = worst.max(bracket_values(i, vn, s.config.l).norm());
        }
    }
    Ok(worst)
}

/// One line of the center dictionary: a curve coefficient against its
/// closed form in the chain products.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DictionaryEntry {
    pub name: &'static str,
    pub computed: f64,
    pub closed: f64,
    /// computed / closed, ±1 when the identity holds.
    pub sign: f64,
}

/// f_{N-1}^(0) ~ 𝒫_0, f_1^(0) ~ 𝒫_0^{-1} Σ 𝒫_k^{-1}, f_{N-1}^((N-1)M) ~ 𝒫_0 Σ 𝒫'_k,
/// f_1^(M) ~ 𝒫_0^{-1} Σ 𝒫'_k^{-1}.
pub fn center_dictionary(s: &CanonicalState<Complex64>) -> Result<Vec<DictionaryEntry>> {
    let c = s.config;
    let (n, m) = (c.n, c.m);
    let curve = spectral_curve(&monodromy(s, MonodromyKind::Tbar)?)?;
    let inv = invariants(&v_from_canonical(s))?;
    let p0 = inv.p0.re;
    let sum_inv = |xs: &[Complex64]| xs.iter().map(|x| 1.0 / x.re).sum::<f64>();
    let sum = |xs: &[Complex64]| xs.iter().map(|x| x.re).sum::<f64>();
    let rows = [
        ("f_{N-1}^(0)", curve.coeff(n - 1, 0), p0),
        ("f_1^(0)", curve.coeff(1, 0), sum_inv(&inv.pchain) / p0),
        ("f_{N-1}^((N-1)M)", curve.coeff(n - 1, (n - 1) * m), p0 * sum(&inv.pprime)),
        ("f_1^(M)", curve.coeff(1, m), sum_inv(&inv.pprime) / p0),
    ];
    Ok(rows
        .into_iter()
        .map(|(name, f, closed)| DictionaryEntry { name, computed: f.re, closed, sign: f.re / closed })
        .collect())
}

/// Gradient of {f, g} in the log coordinates by complex-step
/// differentiation of the dual bracket; exact to rounding for real-valued
/// observables (no subtractive cancellation).
pub fn bracket_gradient(
    f: &dyn Fn(&CanonicalState<Dual>) -> Result<Dual>,
    g: &dyn Fn(&CanonicalState<Dual>) -> Result<Dual>,
    s: &CanonicalState<Complex64>,
) -> Result<Vec<Complex64>> {
    const H: f64 = 1e-30;
    let l = s.config.l;
    let x: Vec<Complex64> = s.p.iter().chain(&s.q).map(|c| c.ln()).collect();
    (0..2 * l)
        .map(|i| {
            let mut xi = x.clone();
            xi[i] += Complex64::new(0.0, H);
            let st = CanonicalState {
                config: s.config,
                p: xi[..l].iter().map(|c| c.exp()).collect(),
                q: xi[l..].iter().map(|c| c.exp()).collect(),
            };
            let sd = st.seeded();
            Ok(Complex64::new(bracket_values(&f(&sd)?, &g(&sd)?, l).im / H, 0.0))
        })
        .collect()
}

/// |{f, {g, h}} + {g, {h, f}} + {h, {f, g}}| for real-valued observables.
pub fn jacobi_residual(
    f: &impl Observable,
    g: &impl Observable,
    h: &impl Observable,
    s: &CanonicalState<Complex64>,
) -> Result<f64> {
    let l = s.config.l;
    let sd = s.seeded();
    let as_dual = |grad: Vec<Complex64>| Dual { re: czero(), grad };
    let gh = as_dual(bracket_gradient(g, h, s)?);
    let hf = as_dual(bracket_gradient(h, f, s)?);
    let fg = as_dual(bracket_gradient(f, g, s)?);
    let total = bracket_values(&f(&sd)?, &gh, l) + bracket_values(&g(&sd)?, &hf, l) + bracket_values(&h(&sd)?, &fg, l);
    Ok(total.norm())
}
