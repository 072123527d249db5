//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use speclat::lattice::{lift_to_canonical, make_config, CanonicalState, LVState};
use speclat::poisson::RVariant;
use speclat::sov::{divisor_of_state, DivisorOptions};
use speclat::verify::{verify, Family, FamilyResult, VerifyOptions, VerifyReport};
use speclat::Error;

const CONFIGS: [(usize, usize); 5] = [(2, 1), (2, 2), (3, 1), (3, 2), (4, 1)];

fn options(families: &[Family]) -> VerifyOptions {
    VerifyOptions {
        seed: 2024,
        configs: CONFIGS.to_vec(),
        families: families.to_vec(),
        exact_states: 50,
        float_states: 3,
        ..VerifyOptions::default()
    }
}

fn summarize(fams: &[&FamilyResult]) -> String {
    let mut parts = Vec::new();
    for f in fams {
        for c in &f.checks {
            parts.push(format!("{} {:.1e}/{:.0e}", c.name, c.max_residual, c.tolerance));
        }
        for e in &f.errors {
            parts.push(format!("error: {e}"));
        }
    }
    parts.join("; ")
}

fn from_report(report: &VerifyReport, fams: &[Family]) -> (bool, String) {
    let rs: Vec<&FamilyResult> = fams.iter().filter_map(|&f| report.family(f)).collect();
    let ok = rs.len() == fams.len() && rs.iter().all(|r| r.pass);
    (ok, summarize(&rs))
}

fn families(fams: &[Family]) -> (bool, String) {
    match verify(&options(fams)) {
        Ok(r) => from_report(&r, fams),
        Err(e) => (false, format!("error: {e}")),
    }
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn lv(n: usize, m: usize, v: &[f64]) -> Result<LVState<Complex64>, Error> {
    LVState::new(make_config(n, m)?, v.iter().map(|&x| c(x)).collect())
}

fn negative_controls() -> (bool, String) {
    let mut flipped = options(&[Family::RmatrixLocal, Family::RmatrixMonodromy]);
    flipped.variant = RVariant::FlippedSign;
    flipped.float_states = 1;
    let flip_fails = matches!(verify(&flipped), Ok(r) if !r.pass);

    let out_of_sector = lv(3, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).and_then(|v| lift_to_canonical(&v, &[c(1.0), c(1.0)]));
    let chain = matches!(out_of_sector, Err(Error::ChainMismatch(_)));

    let degenerate = lv(3, 2, &[1.0; 12])
        .and_then(|v| lift_to_canonical(&v, &[c(1.0), c(1.0)]))
        .and_then(|s: CanonicalState<Complex64>| divisor_of_state(&s, &DivisorOptions::default()));
    let degen = matches!(degenerate, Err(Error::DegenerateDivisor(_)));

    (
        flip_fails && chain && degen,
        format!(
            "flipped r-matrix fails criterion 2: {flip_fails}; out-of-sector lift raises ChainMismatch: {chain}; \
             all-equal V raises DegenerateDivisor: {degen}"
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> (bool, String));
    let criteria: [Criterion; 8] = [
        ("exact identities, rational mode, 50 states per configuration", || families(&[Family::Exact])),
        ("r-matrix relations, local < 1e-12, monodromy < 1e-9, 5x5 grid", || {
            families(&[Family::RmatrixLocal, Family::RmatrixMonodromy])
        }),
        ("centrality (a)-(d) < 1e-9, {H_i, H_j} < 1e-10", || families(&[Family::Center, Family::Hamiltonians])),
        ("separated brackets and on-curve residual", || families(&[Family::Sov])),
        ("zero-mode cancellation B_F = sigma B/B_0, det s_2 = sigma B_0", || families(&[Family::ZeroMode])),
        ("worked examples N=2 and N=3", || families(&[Family::Examples])),
        ("dynamics of (3,1) under H_1, t = 1, dt = 1e-3", || families(&[Family::Dynamics])),
        ("negative controls", negative_controls),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        all &= ok;
        println!(
            "[{}] {}. {} ({:.1}s) -- {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            start.elapsed().as_secs_f64(),
            detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
