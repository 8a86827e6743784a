//! Size limits for materialized representations.

/// Environment variable overriding the dense qubit limit.
pub const DENSE_CAP_ENV: &str = "QRANDLAB_DENSE_MAX_QUBITS";

pub const DEFAULT_DENSE_MAX_QUBITS: usize = 12;
pub const DIAGONAL_MAX_QUBITS: usize = 24;
/// Product forms track ranks in `u64`.
pub const PRODUCT_MAX_QUBITS: usize = 62;

pub fn dense_max_qubits() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&q| q <= DIAGONAL_MAX_QUBITS)
        .unwrap_or(DEFAULT_DENSE_MAX_QUBITS)
}

pub fn diagonal_max_qubits() -> usize {
    DIAGONAL_MAX_QUBITS
}
