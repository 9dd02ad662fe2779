//! Shared fixtures for the criterion benchmarks.

/// Deterministic pseudo-random real vector used as a benchmark input.
pub fn sample_vector(len: usize) -> Vec<f64> {
    (0..len).map(|k| ((k as f64) * 0.618_033_988_75).fract() - 0.5).collect()
}
