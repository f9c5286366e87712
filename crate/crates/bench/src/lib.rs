//! Shared fixtures for the kernel benchmarks.

use lraa_core::lowrank::{truncated_svd_dense, FactoredMatrix, TruncationSpec};
use nalgebra::DMatrix;

/// Deterministic pseudo-random factored matrix of exact rank `r`.
pub fn factored(m: usize, n: usize, r: usize, salt: u64) -> FactoredMatrix {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = DMatrix::from_fn(m, r, |_, _| next());
    let b = DMatrix::from_fn(n, r, |_, _| next());
    truncated_svd_dense(&(a * b.transpose()), TruncationSpec::new(0.0, r).unwrap())
        .expect("finite input")
}
