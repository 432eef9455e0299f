//! Nonnegative matrices, the carrier for spectrogram features, dictionaries,
//! encodings and gains.

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row-major 2-D matrix whose entries are all finite and `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix(Array2<f64>);

impl NonnegMatrix {
    /// Validates every entry.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        for ((row, col), &value) in data.indexed_iter() {
            if !value.is_finite() {
                return Err(Error::NonFinite("nonnegative matrix"));
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { row, col, value });
            }
        }
        Ok(Self(data))
    }

    pub fn from_shape_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let arr = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(arr)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((rows, cols)))
    }

    /// Wraps a matrix the caller has already established to be nonnegative.
    pub(crate) fn from_trusted(data: Array2<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self(data)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.iter().copied().collect()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[[row, col]]
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// Column-wise concatenation `[a b c ...]`; all parts must share a row count.
    pub fn hstack(parts: &[&NonnegMatrix]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("no matrices to concatenate".into()));
        }
        let rows = parts[0].rows();
        if let Some(bad) = parts.iter().find(|p| p.rows() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate {} rows with {} rows",
                rows,
                bad.rows()
            )));
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        let joined =
            concatenate(Axis(1), &views).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Ok(Self(joined))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(matches!(
            NonnegMatrix::new(array![[1.0, -0.5]]),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(NonnegMatrix::new(array![[f64::NAN]]).is_err());
        assert!(NonnegMatrix::new(array![[0.0, 2.0]]).is_ok());
    }

    #[test]
    fn hstack_checks_rows() {
        let a = NonnegMatrix::zeros(2, 3);
        let b = NonnegMatrix::zeros(2, 1);
        let c = NonnegMatrix::zeros(3, 1);
        assert_eq!(NonnegMatrix::hstack(&[&a, &b]).unwrap().cols(), 4);
        assert!(NonnegMatrix::hstack(&[&a, &c]).is_err());
    }
}
