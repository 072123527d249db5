//! State files, exact decimal parsing, and the JSON/CSV writers used by the
//! command-line front end.

use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::algebra::{Mat, Poly, PolyMatrix, Rational, Scalar, SpectralCurve};
use crate::error::{Error, Result};
use crate::gauge::Representative;
use crate::lattice::{lift_to_canonical, make_config, CanonicalState, LVState, LatticeConfig};
use crate::sov::Divisor;

const MAX_EXPONENT: i64 = 4096;

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Exact value of "12", "-1.25", "3/4", "6.02e23", "+1E-3".
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(perr("empty number"));
    }
    if let Some((a, b)) = t.split_once('/') {
        let num = BigInt::from_str(a.trim()).map_err(|_| perr(format!("bad numerator in {t:?}")))?;
        let den = BigInt::from_str(b.trim()).map_err(|_| perr(format!("bad denominator in {t:?}")))?;
        if den.is_zero() {
            return Err(perr(format!("zero denominator in {t:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| perr(format!("bad exponent in {t:?}")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    if exp.abs() > MAX_EXPONENT {
        return Err(perr(format!("exponent out of range in {t:?}")));
    }
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty()) || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(perr(format!("not a number: {t:?}")));
    }
    let digits = format!("{int}{frac}");
    let mut num = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).expect("digits only");
    if neg {
        num = -num;
    }
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Ok(if shift >= 0 { Rational::from_integer(num * pow) } else { Rational::new(num, pow) })
}

/// A number written either as a JSON string (exact) or a JSON number.
#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Text(String),
    Json(serde_json::Number),
}

impl Num {
    fn value(&self) -> Result<Rational> {
        match self {
            Num::Text(s) => parse_decimal(s),
            Num::Json(n) => parse_decimal(&n.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "P")]
    p: Option<Vec<Num>>,
    #[serde(rename = "Q")]
    q: Option<Vec<Num>>,
    #[serde(rename = "V")]
    v: Option<Vec<Num>>,
    #[serde(rename = "Qseed")]
    qseed: Option<Vec<Num>>,
}

/// A parsed state file: canonical (P, Q) or V values with a lift seed.
#[derive(Clone, Debug, PartialEq)]
pub enum StateInput {
    Canonical { config: LatticeConfig, p: Vec<Rational>, q: Vec<Rational> },
    Lv { config: LatticeConfig, v: Vec<Rational>, qseed: Vec<Rational> },
}

fn values(xs: &[Num]) -> Result<Vec<Rational>> {
    xs.iter().map(Num::value).collect()
}

/// {"N":…, "M":…, "P":[…], "Q":[…]} or {"N":…, "M":…, "V":[…], "Qseed":[…]}.
pub fn parse_state(text: &str) -> Result<StateInput> {
    let raw: RawState = serde_json::from_str(text).map_err(|e| perr(e.to_string()))?;
    if raw.n > 64 || raw.m > 64 {
        return Err(Error::InvalidSize { n: raw.n, m: raw.m });
    }
    let config = make_config(raw.n, raw.m)?;
    let check_len = |what: &str, got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(Error::InvalidState(format!("{what} has {got} entries, expected {want}")))
        }
    };
    let positive = |what: &str, xs: &[Rational]| {
        if let Some(i) = xs.iter().position(|x| !x.is_positive()) {
            return Err(Error::InvalidState(format!("{what}_{} = {} is not positive", i + 1, xs[i])));
        }
        Ok(())
    };
    match (raw.p, raw.q, raw.v, raw.qseed) {
        (Some(p), Some(q), None, None) => {
            let (p, q) = (values(&p)?, values(&q)?);
            check_len("P", p.len(), config.l)?;
            check_len("Q", q.len(), config.l)?;
            positive("P", &p)?;
            positive("Q", &q)?;
            Ok(StateInput::Canonical { config, p, q })
        }
        (None, None, Some(v), qseed) => {
            let v = values(&v)?;
            let qseed = match qseed {
                Some(q) => values(&q)?,
                None => vec![<Rational as Scalar>::one(); config.n - 1],
            };
            check_len("V", v.len(), config.l)?;
            check_len("Qseed", qseed.len(), config.n - 1)?;
            positive("V", &v)?;
            positive("Qseed", &qseed)?;
            Ok(StateInput::Lv { config, v, qseed })
        }
        _ => Err(perr("a state needs either P and Q, or V (with optional Qseed)")),
    }
}

fn to_c(x: &Rational) -> Complex64 {
    Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0)
}

impl StateInput {
    pub fn config(&self) -> LatticeConfig {
        match self {
            StateInput::Canonical { config, .. } | StateInput::Lv { config, .. } => *config,
        }
    }

    /// Exact canonical state; a V state needs fractional powers to lift.
    pub fn rational(&self) -> Result<CanonicalState<Rational>> {
        match self {
            StateInput::Canonical { config, p, q } => CanonicalState::new(*config, p.clone(), q.clone()),
            StateInput::Lv { .. } => Err(Error::NeedsFloating),
        }
    }

    pub fn floating(&self) -> Result<CanonicalState<Complex64>> {
        match self {
            StateInput::Canonical { config, p, q } => {
                CanonicalState::new(*config, p.iter().map(to_c).collect(), q.iter().map(to_c).collect())
            }
            StateInput::Lv { config, v, qseed } => {
                let lv = LVState::new(*config, v.iter().map(to_c).collect())?;
                lift_to_canonical(&lv, &qseed.iter().map(to_c).collect::<Vec<_>>())
            }
        }
    }
}

/// JSON rendering of a scalar: exact rationals as "a/b" strings, complex
/// values as [re, im].
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
}

impl JsonScalar for Complex64 {
    fn to_json(&self) -> Value {
        json!([self.re, self.im])
    }
}

fn poly_json<S: JsonScalar>(p: &Poly<S>) -> Value {
    Value::Array(p.coeffs().iter().map(JsonScalar::to_json).collect())
}

fn mat_json<S: JsonScalar>(m: &Mat<S>) -> Value {
    Value::Array((0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(JsonScalar::to_json).collect())).collect())
}

/// Curve JSON: f_k^(j) table (j = 0..kM, i.e. descending powers of z),
/// genus and the Hamiltonians 𝓗_i.
pub fn curve_json<S: JsonScalar>(curve: &SpectralCurve<S>) -> Value {
    let f: Vec<Value> = (1..=curve.n)
        .map(|k| {
            let row: Vec<Value> = (0..=k * curve.m).map(|j| curve.coeff(k, j).to_json()).collect();
            json!({ "k": k, "f": row })
        })
        .collect();
    let hs: Vec<Value> = curve
        .hamiltonian_labels()
        .into_iter()
        .map(|(k, j)| json!({ "k": k, "j": j, "value": curve.coeff(k, j).to_json() }))
        .collect();
    json!({ "N": curve.n, "M": curve.m, "genus": curve.genus, "coefficients": f, "hamiltonians": hs })
}

/// Divisor JSON: {"points":[{"z":[re,im],"w":[re,im]}...],"B0":…,"B":[…]}.
pub fn divisor_json(d: &Divisor<Complex64>) -> Value {
    let pts: Vec<Value> = d.points.iter().map(|p| json!({ "z": p.z.to_json(), "w": p.w.to_json() })).collect();
    json!({ "points": pts, "B0": d.b0.to_json(), "B": poly_json(&d.b) })
}

/// Representative JSON: S, m^(k), μ_j, ν and M_F coefficient matrices
/// (index d holds the coefficient of z^d).
pub fn representative_json<S: JsonScalar>(r: &Representative<S>) -> Value {
    let mf: &PolyMatrix<S> = &r.mf;
    let coeffs: Vec<Value> = (0..=r.m as i64).map(|d| mat_json(&mf.z_coefficient(d))).collect();
    json!({
        "S": mat_json(&r.s),
        "m": r.mcoeffs.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
        "mu": r.mu.iter().map(mat_json).collect::<Vec<_>>(),
        "nu": r.nu.iter().map(JsonScalar::to_json).collect::<Vec<_>>(),
        "MF": coeffs,
    })
}

/// CSV header: t, V_1..V_L, f_k^(j) in 𝓗 order, then z_i real/imag.
pub fn trajectory_header(config: &LatticeConfig, labels: &[(usize, usize)], points: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=config.l).map(|i| format!("V_{i}")));
    h.extend(labels.iter().map(|(k, j)| format!("f_{k}^({j})")));
    for i in 1..=points {
        h.push(format!("z_{i}_re"));
        h.push(format!("z_{i}_im"));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn decimals() {
        assert_eq!(parse_decimal("12").unwrap(), q(12, 1));
        assert_eq!(parse_decimal("-1.25").unwrap(), q(-5, 4));
        assert_eq!(parse_decimal("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_decimal("1.5e2").unwrap(), q(150, 1));
        assert_eq!(parse_decimal("+2E-3").unwrap(), q(1, 500));
        assert_eq!(parse_decimal(".5").unwrap(), q(1, 2));
        assert_eq!(parse_decimal("0.1").unwrap(), q(1, 10));
        for bad in ["", "abc", "1/0", "1e", "--1", "1.2.3", ".", "1e99999999"] {
            assert!(parse_decimal(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn state_forms() {
        let s = parse_state(r#"{"N":2,"M":1,"P":["1","2"],"Q":[0.5,"3/2"]}"#).unwrap();
        assert_eq!(s.rational().unwrap().q[0], q(1, 2));
        let s = parse_state(r#"{"N":2,"M":2,"V":["1","2","6","3"]}"#).unwrap();
        assert_eq!(s.rational(), Err(Error::NeedsFloating));
        assert!(s.floating().is_ok());
    }

    #[test]
    fn bad_states() {
        for bad in [
            "{",
            r#"{"N":2,"M":1,"P":["1"],"Q":["1","1"]}"#,
            r#"{"N":2,"M":1,"P":["1","-1"],"Q":["1","1"]}"#,
            r#"{"N":1,"M":1,"V":[]}"#,
            r#"{"N":2,"M":1,"V":["1","1"],"P":["1","1"]}"#,
            r#"{"N":2,"M":1,"V":["1","1"],"extra":1}"#,
            r#"{"N":2,"M":1,"V":["x","1"]}"#,
        ] {
            assert!(parse_state(bad).is_err(), "{bad}");
        }
    }
}
