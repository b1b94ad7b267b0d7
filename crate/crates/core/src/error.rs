use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown element kind for `{name}`")]
    UnknownKind { line: usize, name: String },
    #[error("line {line}: duplicate device name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("circuit has no ground node `0`")]
    MissingGround,
    #[error("node `{node}` is floating")]
    FloatingNode { node: String },
    #[error("device `{device}`: parameter {param} {reason}")]
    InvalidParam {
        device: String,
        param: String,
        reason: String,
    },
    #[error("unparsable value `{0}`")]
    BadValue(String),
    #[error("unknown reference `{0}`")]
    UnknownReference(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("singular system matrix (pivot {pivot} in row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error(
        "Newton iteration did not converge{}: residual {residual:.3e} A, step {step:.3e} V after {iterations} iterations",
        .context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default()
    )]
    NonConvergence {
        residual: f64,
        step: f64,
        iterations: usize,
        context: Option<String>,
    },
    #[error("transient setup: {0}")]
    Transient(String),
    #[error("time step {dt:e} s underflows the time axis at t = {t:e} s")]
    DtUnderflow { dt: f64, t: f64 },
    #[error("sweep point {path} = {value}: {source}")]
    SweepPoint {
        path: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("analysis window does not span an integer number of periods ({periods} periods)")]
    NonIntegerWindow { periods: f64 },
    #[error("samples are not uniformly spaced")]
    NonUniformSampling,
    #[error("THD undefined: no fundamental component")]
    NoFundamental,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("{0}")]
    Invalid(String),
    #[error("device `{0}` is not in saturation (gm = 0)")]
    NotSaturated(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
