use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("q must lie strictly between 0 and 1, got {0}")]
    InvalidQ(f64),
    #[error("working precision must be between 64 and 65536 bits, got {0}")]
    InvalidPrecision(u32),
    #[error("{name} must be positive and finite, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("|z| = {modulus} is below {min}, outside the controlled convergence region")]
    OutsideConvergence { modulus: f64, min: f64 },
    #[error("the triple product is singular at z = 0")]
    SingularAtZero,
    #[error("contour too close to a zero near {re}{im:+}i (|theta| = {modulus:e})")]
    ContourTooClose { re: f64, im: f64, modulus: f64 },
    #[error("non-integer winding: phase total / 2pi = {0}")]
    NonIntegerWinding(f64),
    #[error("contour sampling budget of {0} samples exhausted")]
    SampleBudget(usize),
    #[error("Newton iteration diverged after {iterations} steps (last |theta| = {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("derivative vanished at {re}{im:+}i")]
    DerivativeVanished { re: f64, im: f64 },
    #[error("iterate left the domain at q = {q}, y = {y}")]
    LeftDomain { q: f64, y: f64 },
    #[error("unresolved cluster of {count} zeros in box centred at {re}{im:+}i")]
    UnresolvedCluster { count: u32, re: f64, im: f64 },
    #[error("zero counts do not reconcile: parent {parent}, children {children}")]
    CountMismatch { parent: i64, children: i64 },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("series did not reach the requested accuracy within {0} terms")]
    TooManyTerms(usize),
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ThetaError>;

pub(crate) fn check_tol(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ThetaError::InvalidTolerance { name, value })
    }
}
