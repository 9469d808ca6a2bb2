use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nodal solver did not converge after {iterations} iterations (last update {last_delta:.3e} V)")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("no wire is driven at a fixed voltage")]
    NoFixedWire,

    #[error("link references wire {wire} which does not exist in array `{array}`")]
    DanglingWire { array: String, wire: String },

    #[error("merged node is driven at conflicting levels {0} V and {1} V")]
    ConflictingDrives(f64, f64),

    #[error("reference resistor {r_g:.3e} ohm outside [{min:.3e}, {max:.3e}]")]
    ReferenceResistor { r_g: f64, min: f64, max: f64 },

    #[error("level {level} V is not permitted on the {array} array")]
    LevelNotPermitted { array: &'static str, level: f64 },

    #[error("gate evaluation corrupted stored state (max w drift {drift:.3e})")]
    StateCorruption { drift: f64 },

    #[error("XNOR gate reused without re-initialising its input cells")]
    ReuseWithoutInit,

    #[error("multi-input XOR needs at least 2 inputs, got {0}")]
    EmptyInput(usize),

    #[error("round index {0} outside 1..=24")]
    RoundOutOfRange(usize),

    #[error("block has {got} bits, expected {expected}")]
    BlockSizeMismatch { expected: usize, got: usize },

    #[error("schedule violation: {0}")]
    ScheduleViolation(String),

    #[error("complement bank is stale at chi entry")]
    ComplementStale,

    #[error("throughput undefined for zero latency")]
    ZeroLatency,

    #[error("no analog trace recorded for `{0}`")]
    MissingTrace(String),

    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
