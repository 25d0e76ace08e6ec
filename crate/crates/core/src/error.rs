use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: entry ({row}, {col}) differs from its mirrored conjugate by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off:e})")]
    EigenNoConvergence { sweeps: usize, off: f64 },

    #[error("polynomial pair failed interpolation consistency check (residual {residual:e})")]
    Interpolation { residual: f64 },

    #[error("target violates the |f| <= 1 - margin requirement: max |f| = {max_abs} (margin {margin:e})")]
    Margin { max_abs: f64, margin: f64 },

    #[error("phase synthesis stagnated at residual {residual:e} above tolerance {tol:e} after {iterations} iterations")]
    SynthesisStalled {
        residual: f64,
        tol: f64,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("filter certification failed at degree cap {degree}: worst violation at x = {x} (condition {condition}, excess {excess:e})")]
    FilterCertification {
        degree: usize,
        condition: &'static str,
        x: f64,
        excess: f64,
    },

    #[error("spectrum outside [0, 1]: eigenvalue {eigenvalue}")]
    SpectrumOutOfRange { eigenvalue: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("phase factors are not symmetric in the SU(2) convention")]
    NonSymmetricPhases,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("energy band assumption violated: eigenvalue {eigenvalue} lies within half-gap of center {center} (delta {delta})")]
    BandAssumption {
        eigenvalue: f64,
        center: f64,
        delta: f64,
    },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ancilla register entangled after a successful round (purity {purity})")]
    AncillaEntangled { purity: f64 },

    #[error("Kraus completeness residual {residual:e} exceeds 1e-6")]
    Completeness { residual: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("time stepping not converged: {steps} vs {doubled} steps differ by {difference:e}")]
    Convergence {
        steps: usize,
        doubled: usize,
        difference: f64,
    },

    #[error("parameter {name} = {value} outside control range [{lo}, {hi}] ")]
    ParameterRange {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("trivial spectrum: all eigenvalues equal {0}")]
    TrivialSpectrum(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
