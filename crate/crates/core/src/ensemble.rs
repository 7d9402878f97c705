use crate::error::{DetError, Result};
use crate::tree::default_column_names;

/// `n x d` sample matrix, row-major, with column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    data: Vec<f64>,
    dims: usize,
    column_names: Vec<String>,
}

impl Ensemble {
    /// Rejects empty ensembles and non-finite entries.
    pub fn new(data: Vec<f64>, dims: usize, column_names: Vec<String>) -> Result<Self> {
        let e = Self::new_allow_empty(data, dims, column_names)?;
        if e.is_empty() {
            return Err(DetError::InvalidInput("ensemble has no samples".into()));
        }
        Ok(e)
    }

    /// Like [`new`](Self::new) but accepts zero rows, e.g. for sampler output.
    pub fn new_allow_empty(data: Vec<f64>, dims: usize, column_names: Vec<String>) -> Result<Self> {
        if dims == 0 {
            return Err(DetError::InvalidInput(
                "ensemble needs at least one column".into(),
            ));
        }
        if !data.len().is_multiple_of(dims) {
            return Err(DetError::InvalidInput(format!(
                "{} values do not fill rows of {dims}",
                data.len()
            )));
        }
        if column_names.len() != dims {
            return Err(DetError::DimensionMismatch {
                expected: dims,
                actual: column_names.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(DetError::InvalidInput(format!(
                "non-finite value in row {}, column {}",
                pos / dims + 1,
                pos % dims + 1
            )));
        }
        Ok(Ensemble {
            data,
            dims,
            column_names,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dims = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(DetError::Csv {
                    row: i + 1,
                    message: format!("expected {dims} fields, found {}", r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dims, default_column_names(dims))
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dims {
            return Err(DetError::DimensionMismatch {
                expected: self.dims,
                actual: names.len(),
            });
        }
        self.column_names = names;
        Ok(self)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dims)
    }

    pub fn column(&self, dim: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Ensemble> {
        for &c in cols {
            if c >= self.dims {
                return Err(DetError::DimensionOutOfRange {
                    index: c,
                    dims: self.dims,
                });
            }
        }
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        let names = cols.iter().map(|&c| self.column_names[c].clone()).collect();
        Self::new_allow_empty(data, cols.len(), names)
    }
}
