//! Dense real third-order tensors.
//!
//! Storage is slice-major: frontal slice `k` occupies one contiguous block of
//! `m1 * m2` values, stored row-major. Entry `(i, j, k)` lives at
//! `k * m1 * m2 + i * m2 + j`. All indices in this crate are zero-based.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense `m1 x m2 x m3` array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(m1: usize, m2: usize, m3: usize) -> Self {
        Self {
            dims: [m1, m2, m3],
            data: vec![0.0; m1 * m2 * m3],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} tensor needs {} values, got {}",
                dims[0],
                dims[1],
                dims[2],
                expected,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(
        m1: usize,
        m2: usize,
        m3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(m1 * m2 * m3);
        for k in 0..m3 {
            for i in 0..m1 {
                for j in 0..m2 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: [m1, m2, m3],
            data,
        }
    }

    /// Builds a tensor from its frontal slices, which must all share one shape.
    pub fn from_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one frontal slice required".into()))?;
        let (m1, m2) = first.shape();
        let mut data = Vec::with_capacity(m1 * m2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (m1, m2) {
                return Err(Error::ShapeMismatch(format!(
                    "slice {k} is {}x{}, expected {m1}x{m2}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            for i in 0..m1 {
                for j in 0..m2 {
                    data.push(s[(i, j)]);
                }
            }
        }
        Ok(Self {
            dims: [m1, m2, slices.len()],
            data,
        })
    }

    /// The identity tensor: first frontal slice is `I_n`, the rest are zero.
    pub fn identity(n: usize, m3: usize) -> Self {
        let mut t = Self::zeros(n, n, m3);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[0] + i) * self.dims[1] + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    fn check_slice(&self, k: usize) -> Result<()> {
        if k >= self.dims[2] {
            return Err(Error::IndexOutOfRange {
                what: "frontal slice",
                index: k,
                size: self.dims[2],
            });
        }
        Ok(())
    }

    /// Raw row-major storage of frontal slice `k`. Panics when `k` is out of range.
    pub fn slice_data(&self, k: usize) -> &[f64] {
        let n = self.dims[0] * self.dims[1];
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_data_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dims[0] * self.dims[1];
        &mut self.data[k * n..(k + 1) * n]
    }

    /// Copy of frontal slice `k` as an `m1 x m2` matrix.
    pub fn frontal_slice(&self, k: usize) -> Result<DMatrix<f64>> {
        self.check_slice(k)?;
        Ok(DMatrix::from_row_slice(
            self.dims[0],
            self.dims[1],
            self.slice_data(k),
        ))
    }

    pub fn set_frontal_slice(&mut self, k: usize, m: &DMatrix<f64>) -> Result<()> {
        self.check_slice(k)?;
        if m.shape() != (self.dims[0], self.dims[1]) {
            return Err(Error::ShapeMismatch(format!(
                "slice must be {}x{}, got {}x{}",
                self.dims[0],
                self.dims[1],
                m.nrows(),
                m.ncols()
            )));
        }
        let m2 = self.dims[1];
        let dst = self.slice_data_mut(k);
        for (idx, v) in dst.iter_mut().enumerate() {
            *v = m[(idx / m2, idx % m2)];
        }
        Ok(())
    }

    pub fn frontal_slices(&self) -> Vec<DMatrix<f64>> {
        (0..self.dims[2])
            .map(|k| DMatrix::from_row_slice(self.dims[0], self.dims[1], self.slice_data(k)))
            .collect()
    }

    /// The mode-3 fiber `(x[i,j,0], ..., x[i,j,m3-1])`.
    pub fn tube(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if i >= self.dims[0] {
            return Err(Error::IndexOutOfRange {
                what: "row",
                index: i,
                size: self.dims[0],
            });
        }
        if j >= self.dims[1] {
            return Err(Error::IndexOutOfRange {
                what: "column",
                index: j,
                size: self.dims[1],
            });
        }
        Ok((0..self.dims[2]).map(|k| self.get(i, j, k)).collect())
    }

    pub fn unfold(&self) -> BlockVector {
        BlockVector {
            blocks: self.frontal_slices(),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest elementwise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Transposes every frontal slice, giving an `m2 x m1 x m3` tensor.
    pub fn transpose_slices(&self) -> Tensor3 {
        let [m1, m2, m3] = self.dims;
        Tensor3::from_fn(m2, m1, m3, |i, j, k| self.get(j, i, k))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Result<Tensor3> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    fn add(self, rhs: &Tensor3) -> Tensor3 {
        self.zip_map(rhs, |a, b| a + b)
            .expect("shape mismatch in add")
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        self.zip_map(rhs, |a, b| a - b)
            .expect("shape mismatch in sub")
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;

    fn mul(self, rhs: f64) -> Tensor3 {
        self.map(|v| v * rhs)
    }
}

/// The stacked frontal slices `[X^(1); X^(2); ...; X^(m3)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockVector {
    pub fn fold(&self) -> Result<Tensor3> {
        Tensor3::from_slices(&self.blocks)
    }

    /// The blocks stacked vertically into one `(m1*m3) x m2` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let (r, c) = self.blocks.first().map(|b| b.shape()).unwrap_or((0, 0));
        let mut out = DMatrix::zeros(r * self.blocks.len(), c);
        for (k, b) in self.blocks.iter().enumerate() {
            out.view_mut((k * r, 0), (r, c)).copy_from(b);
        }
        out
    }

    /// Splits a stacked `(m1*m3) x m2` matrix back into `m3` blocks.
    pub fn from_matrix(m: &DMatrix<f64>, m3: usize) -> Result<Self> {
        if m3 == 0 || !m.nrows().is_multiple_of(m3) {
            return Err(Error::ShapeMismatch(format!(
                "{} rows cannot be split into {m3} blocks",
                m.nrows()
            )));
        }
        let r = m.nrows() / m3;
        Ok(Self {
            blocks: (0..m3)
                .map(|k| m.view((k * r, 0), (r, m.ncols())).into_owned())
                .collect(),
        })
    }
}
