//! Matrix-free entry access.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Read-only access to a matrix through single entries, row blocks and
/// column blocks. Implementations must be deterministic, and the block
/// accessors must agree entrywise with [`EntryOracle::entry`].
pub trait EntryOracle: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> Result<f64>;

    /// `|rows| x ncols` block.
    fn row_block(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        let n = self.ncols();
        let mut out = DMatrix::zeros(rows.len(), n);
        for (a, &i) in rows.iter().enumerate() {
            for j in 0..n {
                out[(a, j)] = self.entry(i, j)?;
            }
        }
        Ok(out)
    }

    /// `nrows x |cols|` block.
    fn col_block(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        let m = self.nrows();
        let mut out = DMatrix::zeros(m, cols.len());
        for (b, &j) in cols.iter().enumerate() {
            for i in 0..m {
                out[(i, b)] = self.entry(i, j)?;
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_index(i: usize, j: usize, m: usize, n: usize) -> Result<()> {
    if i >= m || j >= n {
        return Err(Error::IndexOutOfRange {
            row: i,
            col: j,
            nrows: m,
            ncols: n,
        });
    }
    Ok(())
}

pub(crate) fn check_rows(rows: &[usize], m: usize, n: usize) -> Result<()> {
    for &i in rows {
        check_index(i, 0, m, n.max(1))?;
    }
    Ok(())
}

pub(crate) fn check_cols(cols: &[usize], m: usize, n: usize) -> Result<()> {
    for &j in cols {
        check_index(0, j, m.max(1), n)?;
    }
    Ok(())
}

/// Oracle backed by a closure of `(i, j)`.
pub struct FnOracle<F> {
    nrows: usize,
    ncols: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    pub fn new(nrows: usize, ncols: usize, f: F) -> Self {
        Self { nrows, ncols, f }
    }
}

impl<F> EntryOracle for FnOracle<F>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, self.nrows, self.ncols)?;
        Ok((self.f)(i, j))
    }
}

/// Oracle over an explicit dense matrix. Used for testing and for small
/// reference problems.
pub struct DenseOracle<'a>(pub &'a DMatrix<f64>);

impl EntryOracle for DenseOracle<'_> {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }
    fn ncols(&self) -> usize {
        self.0.ncols()
    }
    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, self.0.nrows(), self.0.ncols())?;
        Ok(self.0[(i, j)])
    }
    fn row_block(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        check_rows(rows, self.0.nrows(), self.0.ncols())?;
        Ok(self.0.select_rows(rows))
    }
    fn col_block(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        check_cols(cols, self.0.nrows(), self.0.ncols())?;
        Ok(self.0.select_columns(cols))
    }
}
