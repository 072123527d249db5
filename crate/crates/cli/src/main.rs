use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use speclat::algebra::{Rational, Scalar};
use speclat::gauge::representative;
use speclat::io::{curve_json, divisor_json, parse_state, representative_json, trajectory_header, JsonScalar, StateInput};
use speclat::lattice::{jitter, CanonicalState, HamiltonianSelector};
use speclat::laxmono::{monodromy, spectral_curve, MonodromyKind};
use speclat::poisson::RVariant;
use speclat::sov::divisor;
use speclat::verify::{parse_suite, simulate, verify, Tolerances, VerifyOptions};
use speclat::Error;

const JITTER: f64 = 1e-6;

/// Extended Lotka-Volterra lattice: spectral curves, separated variables,
/// gauge representatives and identity verification.
#[derive(Parser)]
#[command(name = "speclat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral curve coefficients f_k^(j), genus and Hamiltonians.
    Curve(StateArgs),
    /// Divisor of separated points (z_i, w_i) and the polynomial B(z).
    Sov(StateArgs),
    /// Gauge representative M_F(z) with S, m^(k), mu_j, nu.
    Repr(StateArgs),
    /// RK4 trajectory as CSV plus a conservation report.
    Simulate(SimulateArgs),
    /// Run the verification suite; exit 1 if any family fails.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Mode {
    Rational,
    Floating,
}

#[derive(Args)]
struct StateArgs {
    /// State file ("-" for stdin).
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value = "floating")]
    mode: Mode,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Perturb P, Q by independent factors 1 ± 1e-6.
    #[arg(long)]
    jitter: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum separation of the zeros of B(z).
    #[arg(long, default_value_t = 1e-8)]
    tol_root: f64,
    /// Largest relative |F(z_i, w_i)| accepted.
    #[arg(long, default_value_t = 1e-9)]
    tol_curve: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    state: StateArgs,
    /// "H1" (sum of V_n) or i for the curve Hamiltonian 𝓗_i.
    #[arg(long, default_value = "H1")]
    hamiltonian: String,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Append z_i columns and check the points stay on the initial curve.
    #[arg(long)]
    track_divisor: bool,
    /// Conservation report file (default stderr).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Drift above which the report is flagged.
    #[arg(long, default_value_t = 1e-8)]
    tol_drift: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// "all" or comma-separated families.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Configurations as NxM, comma-separated.
    #[arg(long, default_value = "2x1,2x2,3x1,3x2")]
    configs: String,
    #[arg(long, default_value_t = 10)]
    exact_states: usize,
    #[arg(long, default_value_t = 2)]
    float_states: usize,
    /// One tolerance for all bracket identities (default: per family).
    #[arg(long)]
    tol_bracket: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol_root: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_drift: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Negative control: flip the sign of one r-matrix term.
    #[arg(long, hide = true)]
    flip_r_sign: bool,
}

/// Exit status with a diagnostic.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSize { .. }
            | Error::InvalidState(_)
            | Error::NeedsFloating
            | Error::ChainMismatch(_)
            | Error::SectorViolation(_)
            | Error::Parse(_) => 2,
            Error::StepRejected { .. } => 4,
            _ => 3,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn input_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

type Outcome = Result<u8, Failure>;

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut s).map_err(|e| input_error(format!("stdin: {e}")))?;
    } else {
        s = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    }
    Ok(s)
}

fn write_output(path: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| input_error(format!("stdout: {e}"))),
    }
}

fn write_json(path: &Option<PathBuf>, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    write_output(path, &s)
}

fn check_tol(name: &str, t: f64) -> Result<(), Failure> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(input_error(format!("--{name} must be positive, got {t}")))
    }
}

fn load(a: &StateArgs) -> Result<StateInput, Failure> {
    check_tol("tol-root", a.tol_root)?;
    check_tol("tol-curve", a.tol_curve)?;
    Ok(parse_state(&read_input(&a.state)?)?)
}

fn maybe_jitter<S: Scalar>(a: &StateArgs, s: CanonicalState<S>) -> CanonicalState<S> {
    if a.jitter {
        jitter(&s, JITTER, &mut ChaCha8Rng::seed_from_u64(a.seed))
    } else {
        s
    }
}

fn floating(a: &StateArgs) -> Result<CanonicalState<Complex64>, Failure> {
    Ok(maybe_jitter(a, load(a)?.floating()?))
}

fn in_mode<R>(
    a: &StateArgs,
    exact: impl FnOnce(CanonicalState<Rational>) -> speclat::Result<R>,
    float: impl FnOnce(CanonicalState<Complex64>) -> speclat::Result<R>,
) -> Result<R, Failure> {
    let input = load(a)?;
    Ok(match a.mode {
        Mode::Rational => exact(maybe_jitter(a, input.rational()?))?,
        Mode::Floating => float(maybe_jitter(a, input.floating()?))?,
    })
}

fn curve_of<S: JsonScalar>(s: CanonicalState<S>) -> speclat::Result<Value> {
    Ok(curve_json(&spectral_curve(&monodromy(&s, MonodromyKind::Tbar)?)?))
}

fn repr_of<S: JsonScalar>(s: CanonicalState<S>) -> speclat::Result<Value> {
    Ok(representative_json(&representative(&monodromy(&s, MonodromyKind::Tbar)?)?))
}

fn cmd_curve(a: StateArgs) -> Outcome {
    let v = in_mode(&a, curve_of, curve_of)?;
    write_json(&a.out, &v)?;
    Ok(0)
}

fn cmd_repr(a: StateArgs) -> Outcome {
    let v = in_mode(&a, repr_of, repr_of)?;
    write_json(&a.out, &v)?;
    Ok(0)
}

fn divisor_options(a: &StateArgs) -> speclat::sov::DivisorOptions {
    speclat::sov::DivisorOptions { root_tol: a.tol_root, curve_tol: a.tol_curve, ..Default::default() }
}

fn cmd_sov(a: StateArgs) -> Outcome {
    if a.mode == Mode::Rational {
        return Err(Error::NeedsFloating.into());
    }
    let s = floating(&a)?;
    let d = divisor(&monodromy(&s, MonodromyKind::Tbar)?, &divisor_options(&a))?;
    write_json(&a.out, &divisor_json(&d))?;
    Ok(0)
}

fn parse_hamiltonian(s: &str, g: usize) -> Result<HamiltonianSelector, Failure> {
    if s.eq_ignore_ascii_case("h1") {
        return Ok(HamiltonianSelector::H1);
    }
    match s.parse::<usize>() {
        Ok(i) if (1..=g).contains(&i) => Ok(HamiltonianSelector::Curve(i - 1)),
        _ => Err(input_error(format!("--hamiltonian must be H1 or an index in 1..={g}, got {s:?}"))),
    }
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    if a.state.mode == Mode::Rational {
        return Err(Error::NeedsFloating.into());
    }
    check_tol("tol-drift", a.tol_drift)?;
    let s = floating(&a.state)?;
    let sel = parse_hamiltonian(&a.hamiltonian, s.config.hamiltonian_count())?;
    let sim = simulate(&s, sel, a.t_end, a.dt, a.track_divisor, &divisor_options(&a.state))?;
    let labels: Vec<(usize, usize)> = (1..s.config.n).flat_map(|k| (1..k * s.config.m).map(move |j| (k, j))).collect();
    let points = if a.track_divisor { s.config.genus } else { 0 };
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| input_error(format!("csv: {e}"));
    w.write_record(trajectory_header(&s.config, &labels, points)).map_err(io_err)?;
    for row in &sim.rows {
        let mut rec = vec![row.t.to_string()];
        rec.extend(row.v.iter().map(f64::to_string));
        rec.extend(row.hamiltonians.iter().map(f64::to_string));
        for z in &row.divisor {
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
        }
        w.write_record(&rec).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| input_error(format!("csv: {e}")))?;
    write_output(&a.state.out, &String::from_utf8(bytes).expect("CSV is UTF-8"))?;

    let r = &sim.report;
    let worst = r.coefficient_drift.max(r.invariant_drift).max(r.divisor_on_initial_curve.unwrap_or(0.0));
    let report = serde_json::json!({
        "steps": r.steps,
        "dt": a.dt,
        "t_end": r.steps as f64 * a.dt,
        "coefficient_drift": r.coefficient_drift,
        "invariant_drift": r.invariant_drift,
        "divisor_on_initial_curve": r.divisor_on_initial_curve,
        "tolerance": a.tol_drift,
        "within_tolerance": worst <= a.tol_drift,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("JSON values serialize");
    text.push('\n');
    match &a.report {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("{}: {e}", p.display())))?,
        None => eprint!("{text}"),
    }
    Ok(0)
}

fn parse_configs(s: &str) -> Result<Vec<(usize, usize)>, Failure> {
    s.split(',')
        .map(|part| {
            let (n, m) = part.trim().split_once(['x', 'X']).ok_or_else(|| input_error(format!("bad config {part:?}")))?;
            let n = n.parse().map_err(|_| input_error(format!("bad N in {part:?}")))?;
            let m = m.parse().map_err(|_| input_error(format!("bad M in {part:?}")))?;
            Ok((n, m))
        })
        .collect()
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let mut tol = Tolerances { root: a.tol_root, drift: a.tol_drift, ..Tolerances::default() };
    check_tol("tol-root", a.tol_root)?;
    check_tol("tol-drift", a.tol_drift)?;
    if let Some(t) = a.tol_bracket {
        check_tol("tol-bracket", t)?;
        tol = tol.with_bracket(t);
    }
    if !(a.dt > 0.0 && a.dt.is_finite() && a.t_end > 0.0 && a.t_end.is_finite()) {
        return Err(input_error("--dt and --t-end must be positive"));
    }
    let opts = VerifyOptions {
        seed: a.seed,
        configs: parse_configs(&a.configs)?,
        families: parse_suite(&a.suite)?,
        variant: if a.flip_r_sign { RVariant::FlippedSign } else { RVariant::Standard },
        tol,
        exact_states: a.exact_states,
        float_states: a.float_states,
        t_end: a.t_end,
        dt: a.dt,
    };
    let report = verify(&opts)?;
    write_json(&a.out, &serde_json::to_value(&report).expect("report serializes"))?;
    Ok(if report.pass { 0 } else { 1 })
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("SPECLAT_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            input_error(format!("SPECLAT_THREADS must be a positive integer, got {v:?}"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| input_error(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Outcome {
        init_threads()?;
        match cli.command {
            Command::Curve(a) => cmd_curve(a),
            Command::Sov(a) => cmd_sov(a),
            Command::Repr(a) => cmd_repr(a),
            Command::Simulate(a) => cmd_simulate(a),
            Command::Verify(a) => cmd_verify(a),
        }
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("speclat: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
