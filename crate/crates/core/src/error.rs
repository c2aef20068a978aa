use thiserror::Error;

/// Every failure the library can report.
///
/// [`Error::is_numerical`] separates numerical breakdowns (which a caller may
/// cure by changing truncation, grid density or tolerances) from domain
/// errors in the input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed operator spec: {0}")]
    MalformedSpec(String),
    #[error("mean matrix C has nearly repeated eigenvalues (min gap {gap:.3e}, threshold {threshold:.3e})")]
    DegenerateMeanMatrix { gap: f64, threshold: f64 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("truncation K = {k} is below the coefficient bandwidth {bandwidth}")]
    TruncationTooSmall { k: usize, bandwidth: usize },
    #[error("eigensolver did not converge")]
    EigensolveFailure,
    #[error("ODE integration failed: {0}")]
    IntegratorFailure(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("ambiguous band matching between nodes {node} and {next}; refine the grid")]
    AmbiguousMatching { node: usize, next: usize },
    #[error("multiplicity estimate changed between radius {r:.3e} ({count_r}) and {half:.3e} ({count_half})")]
    MultiplicityUnstable { r: f64, half: f64, count_r: usize, count_half: usize },
    #[error("refined degeneracy has non-real quasimomentum (Im t = {0:.3e})")]
    DegeneracyOffAxis(f64),
    #[error("classification window contaminated: {0}")]
    WindowContaminated(String),
    #[error("windows overlap: {0}")]
    OverlappingWindows(String),
    #[error("epsilon {epsilon} too large: {count} windows need epsilon * count < h = {h}")]
    EpsilonTooLarge { epsilon: f64, count: usize, h: f64 },
    #[error("bracket sequence is not Cauchy: spread {spread:.3e} exceeds {tol:.3e}")]
    NotCauchy { spread: f64, tol: f64 },
    #[error("zero function: relative residual undefined")]
    ZeroFunction,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigensolveFailure
                | Error::IntegratorFailure(_)
                | Error::NoConvergence(_)
                | Error::AmbiguousMatching { .. }
                | Error::MultiplicityUnstable { .. }
                | Error::DegeneracyOffAxis(_)
                | Error::WindowContaminated(_)
                | Error::NotCauchy { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
