use thiserror::Error;

use crate::fit::DecayFit;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("unsupported qubit count {0} (supported: 1..={max})", max = crate::MAX_QUBITS)]
    UnsupportedQubits(usize),

    #[error("Kraus operators are not trace preserving: max |sum K^dag K - I| = {deviation:.3e}")]
    Completeness { deviation: f64 },

    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("transfer matrix is not real: imaginary residue {residue:.3e}")]
    ComplexResidue { residue: f64 },

    #[error("invalid transfer matrix: {0}")]
    InvalidTransferMatrix(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("probability {value} outside [0, 1] beyond slack")]
    ProbabilityOutOfRange { value: f64 },

    #[error("parameter {name} = {value} outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("qubit pair ({0}, {1}) is not a valid pair i < j < n")]
    InvalidPair(usize, usize),

    #[error("empty composite noise specification")]
    EmptyComposite,

    #[error("noise spec parse error at byte {pos}: {msg}")]
    NoiseParse { pos: usize, msg: String },

    #[error("mixed qubit counts in gate list")]
    MixedQubits,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bounded cost model has no concrete t(R)")]
    NoConcreteCost,

    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    #[error("invalid statistics: {0}")]
    InvalidStatistics(String),

    #[error("degenerate statistics: Y = Z = 0, variance vanishes for every R")]
    DegenerateStatistics,

    #[error("inconsistent cost bounds: discriminant {discriminant:.3e} < 0")]
    InconsistentBounds { discriminant: f64 },

    #[error("invalid fit input: {0}")]
    FitInput(String),

    #[error("decay fit did not converge after {iterations} iterations")]
    FitNonConvergence {
        iterations: usize,
        best: Box<DecayFit>,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
