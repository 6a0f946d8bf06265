//! Error type shared by every module of the laboratory.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain [{lo}, {hi}]")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("map {label} does not leave its domain invariant: f({x}) = {fx}")]
    DomainNotInvariant { label: String, x: f64, fx: f64 },
    #[error("map {label} failed its critical-point check: {reason}")]
    BadCriticalPoints { label: String, reason: String },
    #[error("base map is not uniformly expanding: |g'({theta})| = {slope}")]
    NotExpanding { theta: f64, slope: f64 },
    #[error("derivative vanishes at x = {x}")]
    DerivativeVanishes { x: f64 },
    #[error("map {label} does not provide derivatives of order two and three")]
    MissingDerivative { label: String },
    #[error("orbit hit a critical point at step {step}")]
    HitCritical { step: usize },
    #[error("differential is degenerate at step {step}")]
    DegenerateDifferential { step: usize },
    #[error("branch terminated at step {step} before reaching depth {depth}")]
    Terminated { step: usize, depth: usize },
    #[error("partition would need more than {cap} cells")]
    CapExceeded { cap: usize },
    #[error("no admissible sample pairs were found")]
    EmptySample,
    #[error("invalid Pliss constants: need c1 < c2 <= A, got c1 = {c1}, c2 = {c2}, A = {a}")]
    InvalidConstants { c1: f64, c2: f64, a: f64 },
    #[error("r_{k} = {r} is below the threshold {delta_tilde}")]
    NotHyperbolicLike { k: usize, r: f64, delta_tilde: f64 },
    #[error("curve image is not a graph at iterate {iterate}")]
    NotAGraph { iterate: usize },
    #[error("skew-product has no fitted domination constants")]
    NotDominated,
    #[error("forward orbit of endpoint {endpoint} does not close up within {cap} iterates")]
    ClosureDiverges { endpoint: f64, cap: usize },
    #[error("no inducing time found up to k_max = {k_max}")]
    NotFound { k_max: usize },
    #[error("degenerate gap in cross-ratio configuration")]
    DegenerateGap,
    #[error("iterate is not monotone on the given interval")]
    NotMonotone,
    #[error("{escaped} induced orbits left the discovered branch domains")]
    EscapedDomain { escaped: usize },
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
