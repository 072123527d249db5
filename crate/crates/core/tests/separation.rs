use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use speclat::algebra::{roots, Poly};
use speclat::gauge::{b_f_polynomial, representative};
use speclat::lattice::{
    evolve, hamiltonian, lift_to_canonical, make_config, random_canonical, CanonicalState, HamiltonianSelector,
    LVState,
};
use speclat::laxmono::{monodromy, MonodromyKind};
use speclat::poisson::bracket_values;
use speclat::sov::{b_polynomial, check_separated_brackets, divisor, divisor_of_state, DivisorOptions};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn lifted(n: usize, m: usize, v: &[f64], qseed: &[f64]) -> CanonicalState<Complex64> {
    let lv = LVState::new(make_config(n, m).unwrap(), v.iter().map(|&x| c(x)).collect()).unwrap();
    lift_to_canonical(&lv, &qseed.iter().map(|&x| c(x)).collect::<Vec<_>>()).unwrap()
}

fn corpus(n: usize, m: usize, count: usize, seed: u64) -> Vec<CanonicalState<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = make_config(n, m).unwrap();
    (0..count).map(|_| random_canonical(cfg, 0.4, &mut rng)).collect()
}

fn sorted_roots(p: &Poly<Complex64>) -> Vec<Complex64> {
    roots(p, 1e-8).unwrap().into_iter().map(|r| r.z).collect()
}

#[derive(Deserialize)]
struct Branch {
    z: [f64; 2],
    w: [f64; 2],
}

#[test]
fn n2_example_branch_is_pinned() {
    let golden: Branch = serde_json::from_str(include_str!("golden/n2_divisor.json")).unwrap();
    let s = lifted(2, 2, &[1.0, 2.0, 6.0, 3.0], &[1.0]);
    let d = divisor_of_state(&s, &DivisorOptions::default()).unwrap();
    let p = &d.points[0];
    assert!((p.z - Complex64::new(golden.z[0], golden.z[1])).norm() < 1e-10);
    assert!((p.w - Complex64::new(golden.w[0], golden.w[1])).norm() < 1e-10, "{}", p.w);
}

#[test]
fn divisor_points_on_curve_for_random_states() {
    let opts = DivisorOptions::default();
    for s in corpus(3, 2, 50, 31) {
        let d = divisor_of_state(&s, &opts).unwrap();
        assert_eq!(d.points.len(), 4);
        assert!(d.curve_residual < 1e-9);
    }
}

#[test]
fn zeros_are_gauge_invariant() {
    for (n, m) in [(2, 2), (3, 1), (3, 2), (4, 1)] {
        for s in corpus(n, m, 10, 41) {
            let t = monodromy(&s, MonodromyKind::Tbar).unwrap();
            let zb = sorted_roots(&b_polynomial(&t).unwrap().b);
            let zf = sorted_roots(&b_f_polynomial(&representative(&t).unwrap()).unwrap());
            for (a, b) in zb.iter().zip(&zf) {
                assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "({n},{m}) {a} vs {b}");
            }
        }
    }
}

#[test]
fn separated_brackets_on_random_states() {
    for (n, m) in [(2, 2), (2, 3), (3, 1), (3, 2)] {
        for s in corpus(n, m, 3, 51) {
            let r = check_separated_brackets(&s, &DivisorOptions::default()).unwrap();
            assert!(r.zz < 1e-10 && r.ww < 1e-10, "({n},{m}) {r:?}");
            assert!(r.zw < 1e-8 && r.b0w < 1e-8 && r.b0z < 1e-8, "({n},{m}) {r:?}");
        }
    }
}

/// dz_i/dt along the flow of 𝓗_j equals {z_i, 𝓗_j}.
#[test]
fn flow_velocity_of_divisor() {
    let s = corpus(3, 2, 1, 61).pop().unwrap();
    let l = s.config.l;
    let opts = DivisorOptions::default();
    let dual = divisor(&monodromy(&s.seeded(), MonodromyKind::Tbar).unwrap(), &opts).unwrap();
    let h = 1e-5;
    for j in 0..s.config.hamiltonian_count() {
        let sel = HamiltonianSelector::Curve(j);
        let hv = hamiltonian(&s.seeded(), sel).unwrap();
        let traj = evolve(&s, sel, 2.0 * h, h).unwrap();
        let z1 = divisor_of_state(&traj[1].1, &opts).unwrap();
        let z2 = divisor_of_state(&traj[2].1, &opts).unwrap();
        for p in &dual.points {
            let near = |d: &speclat::sov::Divisor<Complex64>| {
                d.points.iter().map(|q| q.z).min_by(|a, b| (a - p.z.re).norm().total_cmp(&(b - p.z.re).norm())).unwrap()
            };
            let fd = (-3.0 * p.z.re + 4.0 * near(&z1) - near(&z2)) / (2.0 * h);
            let br = bracket_values(&p.z, &hv, l);
            assert!((fd - br).norm() < 1e-6 * (1.0 + br.norm()), "H_{}: {fd} vs {br}", j + 1);
        }
    }
}

/// Two lifts of one V state differ by the Q seed; the representative is
/// expected to depend on T̄ only through the gauge class.
#[test]
fn representative_independent_of_lift() {
    let v = [1.0, 2.0, 4.0, 4.0, 2.0, 1.0];
    let a = lifted(3, 1, &v, &[1.0, 1.0]);
    let b = lifted(3, 1, &v, &[1.7, 0.6]);
    let ra = representative(&monodromy(&a, MonodromyKind::Tbar).unwrap()).unwrap();
    let rb = representative(&monodromy(&b, MonodromyKind::Tbar).unwrap()).unwrap();
    for z in [c(0.3), Complex64::new(1.2, 0.7)] {
        let d = &ra.mf.eval_z(&z).unwrap() - &rb.mf.eval_z(&z).unwrap();
        assert!(d.max_abs() < 1e-10, "{}", d.max_abs());
    }
}
