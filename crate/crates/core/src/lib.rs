pub mod calibration;
pub mod clifford;
pub mod error;
pub mod fit;
pub mod liouville;
pub mod noise;
pub mod optimizer;
pub mod rb;
pub mod rng;
pub mod stats;
pub mod tables;
pub mod verify;

/// Largest register size the transfer-matrix code accepts.
pub const MAX_QUBITS: usize = 3;
