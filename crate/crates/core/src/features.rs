//! Row-compressed feature storage shared by dense tabular data and sparse
//! bag-of-words data.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Feature matrix in compressed sparse row form. Dense inputs simply store
/// every nonzero entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    num_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Borrowed view of one row: parallel column indices and values.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> RowView<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl FeatureMatrix {
    pub fn new(num_cols: usize) -> Self {
        Self {
            num_cols,
            row_ptr: alloc::vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense_rows<R: AsRef<[f64]>>(num_cols: usize, rows: &[R]) -> Result<Self> {
        let mut m = Self::new(num_cols);
        for row in rows {
            m.push_dense(row.as_ref())?;
        }
        Ok(m)
    }

    /// Appends a dense row, keeping only nonzero entries.
    pub fn push_dense(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.num_cols {
            return Err(Error::DimensionMismatch {
                expected: self.num_cols,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature row"));
        }
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                self.col_idx.push(j);
                self.values.push(v);
            }
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    /// Appends a sparse row. Entries must have strictly increasing column
    /// indices below `num_cols`.
    pub fn push_sparse(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        let mut prev: Option<usize> = None;
        for &(j, v) in entries {
            if j >= self.num_cols {
                return Err(Error::DimensionMismatch {
                    expected: self.num_cols,
                    got: j + 1,
                });
            }
            if prev.is_some_and(|p| p >= j) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "sparse row indices must be strictly increasing (saw {j} after {})",
                    prev.unwrap_or(0)
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("feature row"));
            }
            prev = Some(j);
        }
        for &(j, v) in entries {
            if v != 0.0 {
                self.col_idx.push(j);
                self.values.push(v);
            }
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    pub fn num_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        RowView {
            indices: &self.col_idx[s..e],
            values: &self.values[s..e],
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.num_cols];
        for (j, v) in self.row(i).iter() {
            out[j] = v;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        match row.indices.binary_search(&j) {
            Ok(pos) => row.values[pos],
            Err(_) => 0.0,
        }
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::new(self.num_cols);
        for &i in rows {
            let r = self.row(i);
            out.col_idx.extend_from_slice(r.indices);
            out.values.extend_from_slice(r.values);
            out.row_ptr.push(out.col_idx.len());
        }
        out
    }
}
