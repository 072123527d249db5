use thiserror::Error;

/// Why a divisor was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisorDefect {
    /// Two zeros of B(z) closer than the root tolerance.
    RootCollision,
    /// A separated point sits on a branch point of the curve (dF/dw vanishes).
    Ramification,
}

impl std::fmt::Display for DivisorDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DivisorDefect::RootCollision => f.write_str("root collision"),
            DivisorDefect::Ramification => f.write_str("ramification point"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice size: N = {n}, M = {m} (need N >= 2, M >= 1)")]
    InvalidSize { n: usize, m: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("fractional powers of dynamical values need a floating scalar mode")]
    NeedsFloating,
    #[error("interpolation nodes too ill-conditioned (estimate {estimate:e} > bound {bound:e})")]
    FloatingConditioning { estimate: f64, bound: f64 },
    #[error("matrix entry has a zeta exponent {exponent} not divisible by {root_order}")]
    NotPolynomialInZ { exponent: i64, root_order: u32 },
    #[error("polynomial has repeated roots within tolerance")]
    DegenerateRoots,
    #[error("root finding needs a polynomial of degree >= 1 with nonzero leading coefficient")]
    ConstantPolynomial,
    #[error("chain products disagree ({0:?}); state is outside the equal-chain-product sector")]
    ChainMismatch(Vec<f64>),
    #[error("integration step rejected at t = {t}: a lattice variable left (0, inf)")]
    StepRejected { t: f64 },
    #[error("monodromy product left a zeta exponent {exponent} not divisible by N")]
    CollapseFailure { exponent: i64 },
    #[error("monodromy degree structure violated: {0}")]
    DegreeStructure(String),
    #[error("r-matrix has a pole at x = 1")]
    PoleAtOne,
    #[error("deg B = {found}, expected genus {expected}")]
    DegreeMismatch { found: usize, expected: usize },
    #[error("B(z) vanishes identically")]
    ZeroB,
    #[error("degenerate divisor: {0}")]
    DegenerateDivisor(DivisorDefect),
    #[error("separated point off the spectral curve (residual {0:e})")]
    OffCurve(f64),
    #[error("gauge matrix S is singular (|det S| = {0:e})")]
    SingularS(f64),
    #[error("singular matrix")]
    SingularMatrix,
    #[error("representative invariant violated: {0}")]
    Representative(String),
    #[error("state outside the solved-example sector: {0}")]
    SectorViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
