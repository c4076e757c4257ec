//! Read-only row/column views used as learner inputs.
//!
//! Learners never require a materialized feature matrix: a lagged window over
//! the aggregate signal, a dense buffer, or a base view with extra chained
//! label columns all implement [`Design`].

use alloc::vec::Vec;

use crate::{Error, Result};

pub trait Design {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn value(&self, row: usize, col: usize) -> f64;

    fn row_into(&self, row: usize, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate().take(self.n_cols()) {
            *slot = self.value(row, c);
        }
    }

    fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.value(r, col)).collect()
    }
}

impl<D: Design + ?Sized> Design for &D {
    fn n_rows(&self) -> usize {
        (**self).n_rows()
    }
    fn n_cols(&self) -> usize {
        (**self).n_cols()
    }
    fn value(&self, row: usize, col: usize) -> f64 {
        (**self).value(row, col)
    }
    fn row_into(&self, row: usize, out: &mut [f64]) {
        (**self).row_into(row, out)
    }
}

pub(crate) fn expect_cols(x: &dyn Design, expected: usize) -> Result<()> {
    if x.n_cols() != expected {
        return Err(Error::Shape {
            what: "feature columns",
            expected,
            found: x.n_cols(),
        });
    }
    Ok(())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                what: "dense matrix buffer",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape {
                    what: "row width",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Copies any view into a dense buffer.
    pub fn collect(x: &dyn Design) -> Self {
        let (rows, cols) = (x.n_rows(), x.n_cols());
        let mut data = alloc::vec![0.0; rows * cols];
        for r in 0..rows {
            x.row_into(r, &mut data[r * cols..(r + 1) * cols]);
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl Design for DenseMatrix {
    fn n_rows(&self) -> usize {
        self.rows
    }
    fn n_cols(&self) -> usize {
        self.cols
    }
    #[inline]
    fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
    fn row_into(&self, row: usize, out: &mut [f64]) {
        out[..self.cols].copy_from_slice(self.row(row));
    }
}

/// Sliding-window view: row `r` is `signal[first + r .. first + r + width]`.
#[derive(Debug, Clone, Copy)]
pub struct LaggedView<'a> {
    signal: &'a [f64],
    first: usize,
    rows: usize,
    width: usize,
}

impl<'a> LaggedView<'a> {
    /// `signal` must hold at least `first + rows + width - 1` values.
    pub fn new(signal: &'a [f64], first: usize, rows: usize, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::invalid("window width must be positive"));
        }
        if rows > 0 && first + rows + width - 1 > signal.len() {
            return Err(Error::Shape {
                what: "lagged signal length",
                expected: first + rows + width - 1,
                found: signal.len(),
            });
        }
        Ok(LaggedView {
            signal,
            first,
            rows,
            width,
        })
    }

    pub fn row(&self, r: usize) -> &'a [f64] {
        let s = self.first + r;
        &self.signal[s..s + self.width]
    }
}

impl Design for LaggedView<'_> {
    fn n_rows(&self) -> usize {
        self.rows
    }
    fn n_cols(&self) -> usize {
        self.width
    }
    #[inline]
    fn value(&self, row: usize, col: usize) -> f64 {
        self.signal[self.first + row + col]
    }
    fn row_into(&self, row: usize, out: &mut [f64]) {
        out[..self.width].copy_from_slice(self.row(row));
    }
}

/// A base view followed by extra 0/1 columns, as consumed by chained
/// classifiers.
pub struct Augmented<'a> {
    base: &'a dyn Design,
    extra: &'a [Vec<f64>],
}

impl<'a> Augmented<'a> {
    pub fn new(base: &'a dyn Design, extra: &'a [Vec<f64>]) -> Result<Self> {
        for col in extra {
            if col.len() != base.n_rows() {
                return Err(Error::Shape {
                    what: "augmented column length",
                    expected: base.n_rows(),
                    found: col.len(),
                });
            }
        }
        Ok(Augmented { base, extra })
    }
}

impl Design for Augmented<'_> {
    fn n_rows(&self) -> usize {
        self.base.n_rows()
    }
    fn n_cols(&self) -> usize {
        self.base.n_cols() + self.extra.len()
    }
    #[inline]
    fn value(&self, row: usize, col: usize) -> f64 {
        let w = self.base.n_cols();
        if col < w {
            self.base.value(row, col)
        } else {
            self.extra[col - w][row]
        }
    }
    fn row_into(&self, row: usize, out: &mut [f64]) {
        let w = self.base.n_cols();
        self.base.row_into(row, &mut out[..w]);
        for (slot, col) in out[w..].iter_mut().zip(self.extra) {
            *slot = col[row];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn lagged_rows_slide() {
        let sig = [0.0, 1.0, 2.0, 3.0];
        let v = LaggedView::new(&sig, 0, 3, 2).unwrap();
        assert_eq!(v.row(0), &[0.0, 1.0]);
        assert_eq!(v.row(2), &[2.0, 3.0]);
        assert_eq!(v.value(1, 1), 2.0);
        assert!(LaggedView::new(&sig, 1, 3, 2).is_err());
    }

    #[test]
    fn augmented_appends_columns() {
        let base = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let extra = vec![vec![0.0, 1.0]];
        let a = Augmented::new(&base, &extra).unwrap();
        assert_eq!(a.n_cols(), 3);
        let mut row = [0.0; 3];
        a.row_into(1, &mut row);
        assert_eq!(row, [3.0, 4.0, 1.0]);
        assert_eq!(DenseMatrix::collect(&a).row(0), &[1.0, 2.0, 0.0]);
    }
}
