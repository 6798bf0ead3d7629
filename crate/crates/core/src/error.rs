use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not unitary: deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("degenerate eigenframe: {0}")]
    DegenerateFrame(String),

    #[error("mixing angle undefined: pump and Stokes fields both vanish")]
    UndefinedAngle,

    #[error("negative field amplitude (pump {pump}, Stokes {stokes})")]
    NegativeField { pump: f64, stokes: f64 },

    #[error("operation `{operation}` does not support scheme {scheme}")]
    UnsupportedScheme {
        operation: &'static str,
        scheme: String,
    },

    #[error("singular point at theta = {theta}: {detail}")]
    SingularPoint { theta: f64, detail: String },

    #[error("invalid level scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid shortcut configuration: {0}")]
    InvalidShortcut(String),

    #[error("reduced shortcut system is inconsistent: residual {residual:.3e}")]
    InconsistentShortcut { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrator failure: norm drift {drift:.3e} at t = {t}")]
    IntegratorFailure { t: f64, drift: f64 },

    #[error("scan aborted at {parameter} = {value}: {source}")]
    ScanPoint {
        parameter: String,
        value: f64,
        source: Box<Error>,
    },

    #[error("unknown figure id {0} (expected 3..=8)")]
    UnknownFigure(u32),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
