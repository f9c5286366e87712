//! Benchmark matrices for cross approximation.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oracle::{EntryOracle, FnOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMatrix {
    /// Hilbert matrix `1 / (i + j - 1)` (1-based).
    G1,
    /// `(|x_i + y_j| / 2)^5` on the uniform grid of `[-1, 1]` including ends.
    G2,
    /// Anisotropic Gaussian on coordinates rotated by `2 pi t`.
    H1,
    /// Quintic kink on coordinates rotated by `2 pi t`.
    H2,
}

impl TestMatrix {
    pub fn default_size(self) -> usize {
        match self {
            TestMatrix::G1 => 100,
            _ => 500,
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, TestMatrix::H1 | TestMatrix::H2)
    }
}

impl FromStr for TestMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Ok(TestMatrix::G1),
            "G2" => Ok(TestMatrix::G2),
            "H1" => Ok(TestMatrix::H1),
            "H2" => Ok(TestMatrix::H2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown test matrix `{s}` (expected G1, G2, H1 or H2)"
            ))),
        }
    }
}

type BoxedEntry = Box<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// Entry oracle of a benchmark matrix of size `m x n`. `t` is the rotation
/// parameter of the parametric matrices and ignored otherwise.
pub fn make_test_oracle(name: &str, m: usize, n: usize, t: f64) -> Result<FnOracle<BoxedEntry>> {
    let kind: TestMatrix = name.parse()?;
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!("test matrices need m, n >= 2, got {m}x{n}")));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("rotation parameter"));
    }
    let f: BoxedEntry = match kind {
        TestMatrix::G1 => Box::new(|i, j| 1.0 / (i + j + 1) as f64),
        TestMatrix::G2 => {
            let (dm, dn) = ((m - 1) as f64, (n - 1) as f64);
            Box::new(move |i, j| {
                let x = -1.0 + 2.0 * i as f64 / dm;
                let y = -1.0 + 2.0 * j as f64 / dn;
                quintic_kink(x, y)
            })
        }
        TestMatrix::H1 | TestMatrix::H2 => {
            let (hx, hy) = (2.0 / (m + 1) as f64, 2.0 / (n + 1) as f64);
            let (s, c) = (2.0 * PI * t).sin_cos();
            Box::new(move |i, j| {
                let x0 = -1.0 + (i + 1) as f64 * hx;
                let y0 = -1.0 + (j + 1) as f64 * hy;
                let x = c * x0 + s * y0;
                let y = -s * x0 + c * y0;
                if kind == TestMatrix::H1 {
                    (-((x / 0.3).powi(2) + (y / 0.1).powi(2))).exp()
                } else {
                    quintic_kink(x, y)
                }
            })
        }
    };
    Ok(FnOracle::new(m, n, f))
}

fn quintic_kink(x: f64, y: f64) -> f64 {
    ((x + y).abs() / 2.0).powi(5)
}

/// Convenience: `make_test_oracle` as a trait object.
pub fn boxed_test_oracle(name: &str, m: usize, n: usize, t: f64) -> Result<Box<dyn EntryOracle>> {
    Ok(Box::new(make_test_oracle(name, m, n, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_entries() {
        let g = make_test_oracle("G1", 100, 100, 0.0).unwrap();
        assert_eq!(g.entry(0, 0).unwrap(), 1.0);
        assert_eq!(g.entry(1, 2).unwrap(), 0.25);
    }

    #[test]
    fn kink_vanishes_on_antidiagonal() {
        let g = make_test_oracle("G2", 501, 501, 0.0).unwrap();
        assert!(g.entry(100, 400).unwrap().abs() < 1e-30);
        assert!(make_test_oracle("G7", 5, 5, 0.0).is_err());
    }

    #[test]
    fn rotation_is_periodic() {
        for name in ["H1", "H2"] {
            let a = make_test_oracle(name, 40, 30, 0.0).unwrap();
            let b = make_test_oracle(name, 40, 30, 1.0).unwrap();
            let c = make_test_oracle(name, 40, 30, 1.3).unwrap();
            let d = make_test_oracle(name, 40, 30, 0.3).unwrap();
            for i in 0..40 {
                for j in 0..30 {
                    assert!((a.entry(i, j).unwrap() - b.entry(i, j).unwrap()).abs() <= 1e-12);
                    assert!((c.entry(i, j).unwrap() - d.entry(i, j).unwrap()).abs() <= 1e-12);
                }
            }
        }
    }
}
