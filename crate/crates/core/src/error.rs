use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tie probability alpha = {0} is outside [0, 1)")]
    AlphaOutOfRange(f64),
    #[error("percolation parameter beta = {0} is outside (0, 1)")]
    BetaOutOfRange(f64),
    #[error("dimension {n} exceeds the {mode} cap of {cap}")]
    DimensionTooLarge { n: u32, cap: u32, mode: &'static str },
    #[error("dimension {0} is below the minimum of 2 players")]
    DimensionTooSmall(u32),
    #[error("payoff table incomplete: {0}")]
    IncompleteTable(String),
    #[error("edge (base={base:#x}, axis={axis}) is not canonical: bit {axis} of base is set")]
    NonCanonicalEdge { base: u64, axis: u32 },
    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: u32, n: u32 },
    #[error("vertex {vertex:#x} has bits above dimension {n}")]
    InvalidVertex { vertex: u64, n: u32 },
    #[error("operation requires an exhaustive medium")]
    ExhaustiveModeRequired,
    #[error("exact trap detection requested but no sink analysis was supplied")]
    MissingSinkAnalysis,
    #[error("sink analysis dimension {analysis} does not match medium dimension {medium}")]
    SinkAnalysisMismatch { analysis: u32, medium: u32 },
    #[error("max_steps must be at least 1")]
    StepCapZero,
    #[error("vertex {0:#x} in the assumption sample is a PNE")]
    PneInSample(u64),
    #[error("vertex sample is empty")]
    EmptySample,
    #[error("lambda = {0} is outside (0, 1]")]
    LambdaOutOfRange(f64),
    #[error("medium and initial percolation share the random stream {0:#018x}")]
    SeedCollision(u64),
    #[error("trial count must be positive")]
    EmptyTrialCount,
    #[error("no trials satisfied the conditioning event for {policy} at alpha = {alpha}")]
    NoConditionedTrials { policy: String, alpha: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
