//! Dense non-negative matrices.
//!
//! [`NonNegMatrix`] wraps a row-major `ndarray::Array2<f64>` whose entries are
//! validated once at construction: every entry is finite and `>= 0`. All
//! operations here return values that satisfy the same invariant, so callers
//! never re-validate.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Lower bound used wherever a division or a negative power needs a strictly
/// positive operand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPolicy {
    floor: f64,
}

impl EpsilonPolicy {
    pub const DEFAULT_FLOOR: f64 = 1e-12;
    pub const DEFAULT: EpsilonPolicy = EpsilonPolicy {
        floor: Self::DEFAULT_FLOOR,
    };

    pub fn new(floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1e-6) {
            return Err(Error::Config(format!(
                "epsilon floor must lie in (0, 1e-6), got {floor}"
            )));
        }
        Ok(Self { floor })
    }

    #[inline]
    pub fn floor(&self) -> f64 {
        self.floor
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        v.max(self.floor)
    }
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix {
    data: Array2<f64>,
}

impl NonNegMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "NonNegMatrix::new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let arr = Array2::from_shape_vec((rows, cols), data).expect("length checked above");
        Self::from_array(arr)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                op: "NonNegMatrix::from_rows",
                left: (r, c),
                right: (1, bad.len()),
            });
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if let Some(((row, col), &value)) = data
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidEntry { row, col, value });
        }
        // Normalise to standard (row-major) layout so `as_slice` always works.
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { data })
    }

    /// Wraps an array the caller has already proven valid.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        debug_assert!(data.nrows() > 0 && data.ncols() > 0);
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Self { data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, 0.0)
    }

    pub fn ones(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, 1.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix { rows: 0, cols: 0 });
        }
        Ok(Self::from_array_unchecked(Array2::eye(n)))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice().expect("standard layout")
    }

    pub fn transpose(&self) -> Self {
        Self::from_array_unchecked(self.data.t().as_standard_layout().into_owned())
    }

    pub fn matmul(&self, rhs: &NonNegMatrix) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(Self::from_array_unchecked(self.data.dot(&rhs.data)))
    }

    /// `num / max(den, floor)` entrywise.
    pub fn safe_ratio(&self, den: &NonNegMatrix, eps: EpsilonPolicy) -> Result<Self> {
        self.check_same_shape("safe_ratio", den)?;
        let mut out = self.data.clone();
        out.zip_mut_with(&den.data, |n, &d| *n /= eps.apply(d));
        Ok(Self::from_array_unchecked(out))
    }

    /// Entrywise power. Negative exponents require strictly positive entries;
    /// floor the matrix first with [`NonNegMatrix::floored`].
    pub fn powf(&self, p: f64) -> Result<Self> {
        if p < 0.0 {
            if let Some(((row, col), &value)) = self.data.indexed_iter().find(|(_, v)| **v == 0.0)
            {
                return Err(Error::InvalidEntry { row, col, value });
            }
        }
        let out = self.data.mapv(|v| v.powf(p));
        Self::from_array(out)
    }

    /// Copy with every entry raised to at least `eps.floor()`.
    pub fn floored(&self, eps: EpsilonPolicy) -> Self {
        Self::from_array_unchecked(self.data.mapv(|v| eps.apply(v)))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_array(self.data.mapv(|v| v * factor))
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.data.sum_axis(Axis(0)).to_vec()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.sum_axis(Axis(1)).to_vec()
    }

    pub fn sum(&self) -> f64 {
        self.data.sum()
    }

    pub fn mean_all(&self) -> f64 {
        self.data.sum() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &NonNegMatrix) -> Result<f64> {
        self.check_same_shape("max_abs_diff", other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).to_vec()
    }

    pub(crate) fn check_same_shape(&self, op: &'static str, other: &NonNegMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}
