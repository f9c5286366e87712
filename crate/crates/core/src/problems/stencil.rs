//! Matrix-free oracles for 9-point local maps of a factored iterate.

use nalgebra::DMatrix;

use super::{BoundaryFn, BoundaryKind, Grid2D};
use crate::error::Result;
use crate::lowrank::FactoredMatrix;
use crate::oracle::{check_cols, check_index, check_rows, EntryOracle};

/// Values of `X` around `(i, j)`; `n`/`s` are rows `i -1`/`i + 1`, `w`/`e`
/// columns `j - 1`/`j + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighborhood {
    pub c: f64,
    pub n: f64,
    pub s: f64,
    pub w: f64,
    pub e: f64,
    pub nw: f64,
    pub ne: f64,
    pub sw: f64,
    pub se: f64,
}

/// Entry oracle of `(i, j) -> f(i, j, neighborhood of X at (i, j))`.
///
/// Out-of-grid neighbors are zero, wrapped, or taken from a boundary
/// function depending on the grid's boundary kind.
pub struct StencilOracle<'a, F> {
    x: &'a FactoredMatrix,
    grid: Grid2D,
    boundary: Option<BoundaryFn>,
    f: F,
}

impl<'a, F> StencilOracle<'a, F>
where
    F: Fn(usize, usize, &Neighborhood) -> Result<f64> + Sync,
{
    pub fn new(x: &'a FactoredMatrix, grid: Grid2D, boundary: Option<BoundaryFn>, f: F) -> Self {
        Self { x, grid, boundary, f }
    }

    fn ghost(&self, i: isize, j: isize) -> f64 {
        match (&self.boundary, self.grid.boundary) {
            (Some(g), BoundaryKind::DirichletFromFunction) => g(self.grid.x(i), self.grid.y(j)),
            _ => 0.0,
        }
    }

    /// Resolve `(i, j)` to an in-grid index (wrapping when periodic) or
    /// `None` for a boundary point.
    fn resolve(&self, i: isize, j: isize) -> Option<(usize, usize)> {
        let (m, n) = (self.grid.m as isize, self.grid.n as isize);
        if self.grid.is_periodic() {
            return Some((i.rem_euclid(m) as usize, j.rem_euclid(n) as usize));
        }
        if i < 0 || j < 0 || i >= m || j >= n {
            None
        } else {
            Some((i as usize, j as usize))
        }
    }

    fn eval_with(&self, i: usize, j: usize, fetch: &dyn Fn(usize, usize) -> f64) -> Result<f64> {
        let at = |di: isize, dj: isize| {
            let (ii, jj) = (i as isize + di, j as isize + dj);
            match self.resolve(ii, jj) {
                Some((a, b)) => fetch(a, b),
                None => self.ghost(ii, jj),
            }
        };
        let nb = Neighborhood {
            c: fetch(i, j),
            n: at(-1, 0),
            s: at(1, 0),
            w: at(0, -1),
            e: at(0, 1),
            nw: at(-1, -1),
            ne: at(-1, 1),
            sw: at(1, -1),
            se: at(1, 1),
        };
        (self.f)(i, j, &nb)
    }

    fn neighbor_lines(&self, idx: &[usize], len: usize) -> Vec<usize> {
        let mut set = std::collections::BTreeSet::new();
        for &i in idx {
            for d in [-1isize, 0, 1] {
                let ii = i as isize + d;
                if self.grid.is_periodic() {
                    set.insert(ii.rem_euclid(len as isize) as usize);
                } else if ii >= 0 && (ii as usize) < len {
                    set.insert(ii as usize);
                }
            }
        }
        set.into_iter().collect()
    }
}

impl<F> EntryOracle for StencilOracle<'_, F>
where
    F: Fn(usize, usize, &Neighborhood) -> Result<f64> + Sync,
{
    fn nrows(&self) -> usize {
        self.grid.m
    }
    fn ncols(&self) -> usize {
        self.grid.n
    }

    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        check_index(i, j, self.grid.m, self.grid.n)?;
        self.eval_with(i, j, &|a, b| self.x.entry_unchecked(a, b))
    }

    fn row_block(&self, rows: &[usize]) -> Result<DMatrix<f64>> {
        let (m, n) = (self.grid.m, self.grid.n);
        check_rows(rows, m, n)?;
        let lines = self.neighbor_lines(rows, m);
        let block = self.x.rows(&lines)?;
        let pos = positions(&lines, m);
        let fetch = |a: usize, b: usize| block[(pos[a], b)];
        let mut out = DMatrix::zeros(rows.len(), n);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..n {
                out[(r, j)] = self.eval_with(i, j, &fetch)?;
            }
        }
        Ok(out)
    }

    fn col_block(&self, cols: &[usize]) -> Result<DMatrix<f64>> {
        let (m, n) = (self.grid.m, self.grid.n);
        check_cols(cols, m, n)?;
        let lines = self.neighbor_lines(cols, n);
        let block = self.x.cols(&lines)?;
        let pos = positions(&lines, n);
        let fetch = |a: usize, b: usize| block[(a, pos[b])];
        let mut out = DMatrix::zeros(m, cols.len());
        for (c, &j) in cols.iter().enumerate() {
            for i in 0..m {
                out[(i, c)] = self.eval_with(i, j, &fetch)?;
            }
        }
        Ok(out)
    }
}

fn positions(lines: &[usize], len: usize) -> Vec<usize> {
    let mut pos = vec![usize::MAX; len];
    for (p, &i) in lines.iter().enumerate() {
        pos[i] = p;
    }
    pos
}
