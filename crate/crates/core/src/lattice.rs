//! LV(N) configurations, canonical and V-variable states, the lattice
//! vector field, invariants and Hamiltonian time evolution.

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{Dual, Rational, Scalar};
use crate::error::{Error, Result};
use crate::laxmono::{monodromy, spectral_curve, MonodromyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeConfig {
    pub n: usize,
    pub m: usize,
    /// Number of sites, N(N-1)M.
    pub l: usize,
    pub genus: usize,
}

pub fn make_config(n: usize, m: usize) -> Result<LatticeConfig> {
    if n < 2 || m < 1 {
        return Err(Error::InvalidSize { n, m });
    }
    Ok(LatticeConfig { n, m, l: n * (n - 1) * m, genus: crate::algebra::genus(n, m) })
}

impl LatticeConfig {
    /// Σ_{k=1}^{N-1} (kM - 1).
    pub fn hamiltonian_count(&self) -> usize {
        (1..self.n).map(|k| k * self.m - 1).sum()
    }
}

/// 1-based cyclic index into a site array.
pub fn site<T>(xs: &[T], n: i64) -> &T {
    &xs[(n - 1).rem_euclid(xs.len() as i64) as usize]
}

fn check_positive<S: Scalar>(xs: &[S], what: &str) -> Result<()> {
    for (i, x) in xs.iter().enumerate() {
        let v = x.value();
        if !(v.re > 0.0 && v.re.is_finite()) || v.im.abs() > 1e-12 * v.re.abs() {
            return Err(Error::InvalidState(format!("{what}_{} = {v} is not a positive real", i + 1)));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalState<S> {
    pub config: LatticeConfig,
    pub p: Vec<S>,
    pub q: Vec<S>,
}

impl<S: Scalar> CanonicalState<S> {
    pub fn new(config: LatticeConfig, p: Vec<S>, q: Vec<S>) -> Result<Self> {
        if p.len() != config.l || q.len() != config.l {
            return Err(Error::InvalidState(format!(
                "expected {} sites, got |P| = {}, |Q| = {}",
                config.l,
                p.len(),
                q.len()
            )));
        }
        check_positive(&p, "P")?;
        check_positive(&q, "Q")?;
        Ok(CanonicalState { config, p, q })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> CanonicalState<T> {
        CanonicalState { config: self.config, p: self.p.iter().map(&f).collect(), q: self.q.iter().map(&f).collect() }
    }

    pub fn to_complex(&self) -> CanonicalState<Complex64> {
        self.map(|x| x.value())
    }

    /// Dual-extended copy whose gradients are taken with respect to the log
    /// coordinates (p_1..p_L, q_1..q_L).
    pub fn seeded(&self) -> CanonicalState<Dual> {
        let l = self.config.l;
        let w = 2 * l;
        let p = self.p.iter().enumerate().map(|(i, x)| Dual::variable(x.value(), i, w, x.value())).collect();
        let q = self.q.iter().enumerate().map(|(i, x)| Dual::variable(x.value(), l + i, w, x.value())).collect();
        CanonicalState { config: self.config, p, q }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LVState<S> {
    pub config: LatticeConfig,
    pub v: Vec<S>,
}

impl<S: Scalar> LVState<S> {
    pub fn new(config: LatticeConfig, v: Vec<S>) -> Result<Self> {
        if v.len() != config.l {
            return Err(Error::InvalidState(format!("expected {} sites, got |V| = {}", config.l, v.len())));
        }
        check_positive(&v, "V")?;
        Ok(LVState { config, v })
    }
}

/// V_n = (P_n ... P_{n+N-1})^{-1} Q_n^{-1} Q_{n+N-1}.
pub fn v_from_canonical<S: Scalar>(s: &CanonicalState<S>) -> LVState<S> {
    let n = s.config.n as i64;
    let v = (1..=s.config.l as i64)
        .map(|i| {
            let denom = (0..n).fold(site(&s.q, i).clone(), |acc, k| acc * site(&s.p, i + k).clone());
            site(&s.q, i + n - 1).clone() * denom.inv().expect("positive state")
        })
        .collect();
    LVState { config: s.config, v }
}

/// 𝒫_k = ∏_{n=1}^{NM} V_{(N-1)n+k}, k = 1..N-1.
pub fn chain_products<S: Scalar>(v: &LVState<S>) -> Vec<S> {
    let c = v.config;
    (1..c.n as i64)
        .map(|k| (1..=(c.n * c.m) as i64).fold(S::one(), |acc, i| acc * site(&v.v, (c.n as i64 - 1) * i + k).clone()))
        .collect()
}

/// 𝒫'_k = ∏_{n=1}^{(N-1)M} V_{Nn+k}, k = 1..N.
pub fn chain_products_prime<S: Scalar>(v: &LVState<S>) -> Vec<S> {
    let c = v.config;
    (1..=c.n as i64)
        .map(|k| (1..=((c.n - 1) * c.m) as i64).fold(S::one(), |acc, i| acc * site(&v.v, c.n as i64 * i + k).clone()))
        .collect()
}

/// Inverse of [`v_from_canonical`] on the equal-chain-product sector:
/// constant P = 𝒫_1^{-1/(N^2 M)}, Q solved along each residue chain from
/// the N-1 seeds.
pub fn lift_to_canonical<S: Scalar>(v: &LVState<S>, qseed: &[S]) -> Result<CanonicalState<S>> {
    let c = v.config;
    if qseed.len() != c.n - 1 {
        return Err(Error::InvalidState(format!("need {} Q seeds, got {}", c.n - 1, qseed.len())));
    }
    check_positive(qseed, "Qseed")?;
    let chains = chain_products(v);
    let first = chains[0].clone();
    let mismatch = chains.iter().any(|x| {
        let d = x.clone() - first.clone();
        if S::EXACT {
            !d.is_zero()
        } else {
            d.pivot_size() > 1e-12 * first.pivot_size()
        }
    });
    if mismatch {
        return Err(Error::ChainMismatch(chains.iter().map(|x| x.value().re).collect()));
    }
    let cval = first.powf(-1.0 / (c.n * c.n * c.m) as f64)?;
    let cn = (0..c.n).fold(S::one(), |acc, _| acc * cval.clone());
    let mut q: Vec<S> = vec![S::zero(); c.l];
    q[..c.n - 1].clone_from_slice(qseed);
    for i in 0..c.l - (c.n - 1) {
        q[i + c.n - 1] = v.v[i].clone() * cn.clone() * q[i].clone();
    }
    CanonicalState::new(c, vec![cval; c.l], q)
}

/// (dV/dt)_n = 2 V_n Σ_{k=1}^{N-1} (V_{n+k} - V_{n-k}).
pub fn lv_vector_field<S: Scalar>(v: &LVState<S>) -> Vec<S> {
    let n = v.config.n as i64;
    (1..=v.config.l as i64)
        .map(|i| {
            let s = (1..n).fold(S::zero(), |acc, k| acc + site(&v.v, i + k).clone() - site(&v.v, i - k).clone());
            S::from_i64(2) * site(&v.v, i).clone() * s
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSet<S> {
    /// 𝒫_0 = (∏ V_n)^{-1/N}.
    pub p0: S,
    /// 𝒫_1 .. 𝒫_{N-1}.
    pub pchain: Vec<S>,
    /// 𝒫'_1 .. 𝒫'_N.
    pub pprime: Vec<S>,
    pub h1: S,
}

impl<S: Scalar> InvariantSet<S> {
    /// Flattened in a fixed order: P0, chains, primed chains, H1.
    pub fn to_vec(&self) -> Vec<S> {
        let mut out = vec![self.p0.clone()];
        out.extend(self.pchain.iter().cloned());
        out.extend(self.pprime.iter().cloned());
        out.push(self.h1.clone());
        out
    }
}

pub fn invariants<S: Scalar>(v: &LVState<S>) -> Result<InvariantSet<S>> {
    let prod = v.v.iter().fold(S::one(), |acc, x| acc * x.clone());
    Ok(InvariantSet {
        p0: prod.powf(-1.0 / v.config.n as f64)?,
        pchain: chain_products(v),
        pprime: chain_products_prime(v),
        h1: v.v.iter().fold(S::zero(), |acc, x| acc + x.clone()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianSelector {
    /// Σ V_n.
    H1,
    /// 𝓗_i from the spectral curve, 0-based.
    Curve(usize),
}

/// Value of the selected Hamiltonian at a state.
pub fn hamiltonian<S: Scalar>(s: &CanonicalState<S>, h: HamiltonianSelector) -> Result<S> {
    match h {
        HamiltonianSelector::H1 => Ok(v_from_canonical(s).v.into_iter().fold(S::zero(), |a, x| a + x)),
        HamiltonianSelector::Curve(i) => {
            let curve = spectral_curve(&monodromy(s, MonodromyKind::Tbar)?)?;
            let hs = curve.hamiltonians();
            hs.get(i).cloned().ok_or_else(|| {
                Error::InvalidState(format!("Hamiltonian index {} out of range (g = {})", i + 1, hs.len()))
            })
        }
    }
}

/// Log-coordinate velocity (ṗ, q̇) = (∂h/∂q, -∂h/∂p).
pub fn hamiltonian_velocity(s: &CanonicalState<Complex64>, h: HamiltonianSelector) -> Result<Vec<f64>> {
    let l = s.config.l;
    let hv = hamiltonian(&s.seeded(), h)?;
    let mut out = vec![0.0; 2 * l];
    for i in 0..l {
        out[i] = hv.d(l + i).re;
        out[l + i] = -hv.d(i).re;
    }
    Ok(out)
}

/// Fixed-step RK4 in (log P, log Q). Returns the states at t = 0, dt, ...,
/// with max(1, round(t/dt)) steps.
pub fn evolve(
    s: &CanonicalState<Complex64>,
    h: HamiltonianSelector,
    t: f64,
    dt: f64,
) -> Result<Vec<(f64, CanonicalState<Complex64>)>> {
    if !(dt > 0.0 && dt.is_finite()) || !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidState(format!("bad time grid t = {t}, dt = {dt}")));
    }
    let steps = ((t / dt).round() as usize).max(1);
    let l = s.config.l;
    let to_state = |x: &[f64], time: f64| -> Result<CanonicalState<Complex64>> {
        let p: Vec<Complex64> = x[..l].iter().map(|v| Complex64::new(v.exp(), 0.0)).collect();
        let q: Vec<Complex64> = x[l..].iter().map(|v| Complex64::new(v.exp(), 0.0)).collect();
        let usable = |c: &Complex64| c.re > 0.0 && c.re.is_finite();
        if !p.iter().chain(&q).all(usable) {
            return Err(Error::StepRejected { t: time });
        }
        let st = CanonicalState { config: s.config, p, q };
        if !v_from_canonical(&st).v.iter().all(usable) {
            return Err(Error::StepRejected { t: time });
        }
        Ok(st)
    };
    let field = |x: &[f64], time: f64| -> Result<Vec<f64>> {
        let vel = hamiltonian_velocity(&to_state(x, time)?, h)?;
        if vel.iter().any(|c| !c.is_finite()) {
            return Err(Error::StepRejected { t: time });
        }
        Ok(vel)
    };
    let mut x: Vec<f64> = s.p.iter().chain(&s.q).map(|c| c.re.ln()).collect();
    let mut out = vec![(0.0, to_state(&x, 0.0)?)];
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(u, v)| u + a * v).collect() };
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let k1 = field(&x, t0)?;
        let k2 = field(&axpy(&x, &k1, dt / 2.0), t0)?;
        let k3 = field(&axpy(&x, &k2, dt / 2.0), t0)?;
        let k4 = field(&axpy(&x, &k3, dt), t0)?;
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t1 = (step + 1) as f64 * dt;
        out.push((t1, to_state(&x, t0)?));
    }
    Ok(out)
}

/// Fixed-step RK4 directly on the V equations; the cross-check integrator.
pub fn evolve_v(v: &LVState<f64>, t: f64, dt: f64) -> Vec<Vec<f64>> {
    let steps = ((t / dt).round() as usize).max(1);
    let f = |x: &[f64]| -> Vec<f64> {
        let n = v.config.n as i64;
        (1..=x.len() as i64)
            .map(|i| 2.0 * site(x, i) * (1..n).map(|k| site(x, i + k) - site(x, i - k)).sum::<f64>())
            .collect()
    };
    let mut x = v.v.clone();
    let mut out = vec![x.clone()];
    for _ in 0..steps {
        let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, w)| u + s * w).collect() };
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, dt / 2.0));
        let k3 = f(&add(&x, &k2, dt / 2.0));
        let k4 = f(&add(&x, &k3, dt));
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(x.clone());
    }
    out
}

/// Multiplies every P_n, Q_n by an independent factor 1 + eps·u, u uniform
/// in [-1, 1]. Used only on request to step off measure-zero degeneracies.
pub fn jitter<S: Scalar>(s: &CanonicalState<S>, eps: f64, rng: &mut impl Rng) -> CanonicalState<S> {
    let mut f = |x: &S| x.clone() * S::from_f64(1.0 + eps * rng.gen_range(-1.0..=1.0));
    let p = s.p.iter().map(&mut f).collect();
    let q = s.q.iter().map(&mut f).collect();
    CanonicalState { config: s.config, p, q }
}

/// Positive floating state with log P, log Q uniform in [-spread, spread].
pub fn random_canonical(config: LatticeConfig, spread: f64, rng: &mut impl Rng) -> CanonicalState<Complex64> {
    let mut draw = || Complex64::new(rng.gen_range(-spread..=spread).exp(), 0.0);
    let p = (0..config.l).map(|_| draw()).collect();
    let q = (0..config.l).map(|_| draw()).collect();
    CanonicalState { config, p, q }
}

/// Positive rational state with entries a/b, 1 <= a, b <= 9.
pub fn random_rational_canonical(config: LatticeConfig, rng: &mut impl Rng) -> CanonicalState<Rational> {
    let mut draw = || Rational::new(rng.gen_range(1i64..=9).into(), rng.gen_range(1i64..=9).into());
    let p = (0..config.l).map(|_| draw()).collect();
    let q = (0..config.l).map(|_| draw()).collect();
    CanonicalState { config, p, q }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn lv(n: usize, m: usize, v: &[f64]) -> LVState<Complex64> {
        LVState::new(make_config(n, m).unwrap(), v.iter().map(|&x| c(x)).collect()).unwrap()
    }

    #[test]
    fn configs() {
        let a = make_config(2, 2).unwrap();
        assert_eq!((a.l, a.genus), (4, 1));
        let b = make_config(3, 1).unwrap();
        assert_eq!((b.l, b.genus), (6, 1));
        let d = make_config(3, 2).unwrap();
        assert_eq!((d.l, d.genus), (12, 4));
        assert_eq!(make_config(1, 2), Err(Error::InvalidSize { n: 1, m: 2 }));
        assert_eq!(make_config(2, 0), Err(Error::InvalidSize { n: 2, m: 0 }));
    }

    #[test]
    fn hamiltonian_count_is_genus() {
        for n in 2..=5 {
            for m in 1..=4 {
                let cfg = make_config(n, m).unwrap();
                assert_eq!(cfg.hamiltonian_count(), cfg.genus);
                assert_eq!(cfg.l % n, 0);
                assert_eq!(cfg.l % (n - 1), 0);
            }
        }
    }

    #[test]
    fn v_transform_examples() {
        let cfg = make_config(2, 1).unwrap();
        let ones = CanonicalState::new(cfg, vec![c(1.0); 2], vec![c(1.0); 2]).unwrap();
        assert!(v_from_canonical(&ones).v.iter().all(|x| *x == c(1.0)));

        let cfg = make_config(2, 2).unwrap();
        let s = CanonicalState::new(cfg, vec![c(1.0); 4], vec![c(1.0), c(2.0), c(1.0), c(2.0)]).unwrap();
        let v = v_from_canonical(&s).v;
        let want = [2.0, 0.5, 2.0, 0.5];
        for (a, b) in v.iter().zip(want) {
            assert!((a - c(b)).norm() < 1e-15);
        }
    }

    #[test]
    fn dv_dp_power_rule() {
        let cfg = make_config(3, 1).unwrap();
        let s = CanonicalState::new(cfg, (1..=6).map(|i| c(1.0 + 0.1 * i as f64)).collect(), vec![c(1.3); 6]).unwrap();
        let mut d = s.map(|x| Dual::constant(*x));
        d.p[0] = Dual::variable(s.p[0], 0, 1, c(1.0));
        let v = v_from_canonical(&d);
        let v1 = &v.v[0];
        assert!((v1.d(0) + v1.re / s.p[0]).norm() < 1e-14);
    }

    #[test]
    fn lift_examples() {
        let v = lv(2, 2, &[1.0, 2.0, 6.0, 3.0]);
        let s = lift_to_canonical(&v, &[c(1.0)]).unwrap();
        assert!((s.p[0].re - 36f64.powf(-1.0 / 8.0)).abs() < 1e-15);
        let back = v_from_canonical(&s);
        for (a, b) in back.v.iter().zip(&v.v) {
            assert!((a - b).norm() < 1e-14);
        }

        let v = lv(3, 1, &[1.0, 2.0, 4.0, 4.0, 2.0, 1.0]);
        let s = lift_to_canonical(&v, &[c(1.0), c(1.0)]).unwrap();
        // c^{N^2 M} = 1/𝒫_1 with N^2 M = 9
        assert!((s.p[0].re - 8f64.powf(-1.0 / 9.0)).abs() < 1e-15);
        let back = v_from_canonical(&s);
        for (a, b) in back.v.iter().zip(&v.v) {
            assert!((a - b).norm() < 1e-14);
        }

        let bad = lv(3, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        match lift_to_canonical(&bad, &[c(1.0), c(1.0)]) {
            Err(Error::ChainMismatch(p)) => assert_eq!(p, vec![15.0, 48.0]),
            other => panic!("expected ChainMismatch, got {other:?}"),
        }
    }

    #[test]
    fn vector_field_examples() {
        let f = lv_vector_field(&lv(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!((f[0] - c(-4.0)).norm() < 1e-15);
        let f = lv_vector_field(&lv(3, 1, &[0.7; 6]));
        assert!(f.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn invariant_examples() {
        let inv = invariants(&lv(3, 1, &[1.0, 2.0, 4.0, 4.0, 2.0, 1.0])).unwrap();
        let close = |a: &Complex64, b: f64| (a - c(b)).norm() < 1e-13;
        assert!(inv.pprime.iter().all(|x| close(x, 4.0)));
        assert!(inv.pchain.iter().all(|x| close(x, 8.0)));
        assert!(close(&inv.p0, 0.25));
        assert!(close(&inv.h1, 14.0));

        let inv = invariants(&lv(2, 2, &[1.0, 2.0, 6.0, 3.0])).unwrap();
        assert!(inv.pprime.iter().all(|x| close(x, 6.0)));
        assert!(close(&inv.h1, 12.0));
        assert!(close(&inv.p0, 1.0 / 6.0));

        let inv = invariants(&lv(3, 2, &[1.0; 12])).unwrap();
        assert!(inv.to_vec()[..inv.to_vec().len() - 1].iter().all(|x| close(x, 1.0)));
        assert!(close(&inv.h1, 12.0));
    }

    #[test]
    fn rational_lift_needs_floating() {
        let cfg = make_config(2, 2).unwrap();
        let v = LVState::new(cfg, [1, 2, 6, 3].iter().map(|&x| Rational::from_i64(x)).collect()).unwrap();
        assert_eq!(lift_to_canonical(&v, &[Rational::from_i64(1)]), Err(Error::NeedsFloating));
    }
}
