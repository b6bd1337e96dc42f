//! Measurement containers.
//!
//! A [`DataMatrix`] holds one-dimensional measurements as columns, a
//! [`VideoTensor`] holds two-dimensional frames along its last axis. Both are
//! converted to a [`Frames`] stack, which is what the algorithms operate on.

use ndarray::{Array2, Array3};

use crate::error::{OrkaError, Result};

/// Real `M x N` data matrix, one measurement per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    normalized: bool,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (m, n) = values.dim();
        if m == 0 || n == 0 {
            return Err(OrkaError::shape("M >= 1 and N >= 1", format!("{m}x{n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OrkaError::NonFinite);
        }
        Ok(DataMatrix {
            values,
            normalized: false,
        })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        DataMatrix {
            values: Array2::zeros((m.max(1), n.max(1))),
            normalized: false,
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Whether every column was scaled to `||D_:k||_2 <= 1`.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Scales each nonzero column to unit Euclidean norm.
    pub fn normalize_columns(&mut self) {
        for mut col in self.values.columns_mut() {
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 {
                col.mapv_inplace(|v| v / norm);
            }
        }
        self.normalized = true;
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_columns();
        self
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Real `M1 x M2 x N` video, one frame per index of the last axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor {
    values: Array3<f64>,
}

impl VideoTensor {
    pub fn new(values: Array3<f64>) -> Result<Self> {
        let (r, c, n) = values.dim();
        if r == 0 || c == 0 || n == 0 {
            return Err(OrkaError::shape("non-empty frames", format!("{r}x{c}x{n}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OrkaError::NonFinite);
        }
        Ok(VideoTensor { values })
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.values
    }

    pub fn frame_count(&self) -> usize {
        self.values.dim().2
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A stack of `n` equally sized frames, each stored contiguously in
/// row-major order. One-dimensional measurements are frames with one column.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) n: usize,
    pub(crate) data: Vec<f64>,
}

impl Frames {
    pub(crate) fn zeros(rows: usize, cols: usize, n: usize) -> Self {
        Frames {
            rows,
            cols,
            n,
            data: vec![0.0; rows * cols * n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of frames (measurements).
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Samples per frame.
    pub fn frame_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let len = self.frame_len();
        &self.data[k * len..(k + 1) * len]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.frame_len();
        &mut self.data[k * len..(k + 1) * len]
    }

    pub(crate) fn same_shape(&self, other: &Frames) -> Result<()> {
        if (self.rows, self.cols, self.n) != (other.rows, other.cols, other.n) {
            return Err(OrkaError::shape(
                format!("{}x{}x{}", self.rows, self.cols, self.n),
                format!("{}x{}x{}", other.rows, other.cols, other.n),
            ));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub(crate) fn sub(&self, other: &Frames) -> Frames {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Frames { data, ..*self }
    }

    pub(crate) fn add_assign(&mut self, other: &Frames) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Conversion between user-facing containers and the internal frame stack.
pub trait Measurements: Clone {
    /// Number of shift components per measurement.
    const DIMS: usize;

    fn to_frames(&self) -> Frames;

    fn from_frames(frames: Frames) -> Self;
}

impl Measurements for DataMatrix {
    const DIMS: usize = 1;

    fn to_frames(&self) -> Frames {
        let (m, n) = self.values.dim();
        let mut f = Frames::zeros(m, 1, n);
        for (k, col) in self.values.columns().into_iter().enumerate() {
            for (dst, src) in f.frame_mut(k).iter_mut().zip(col.iter()) {
                *dst = *src;
            }
        }
        f
    }

    fn from_frames(frames: Frames) -> Self {
        let (m, n) = (frames.frame_len(), frames.n);
        let values = Array2::from_shape_fn((m, n), |(i, k)| frames.frame(k)[i]);
        DataMatrix {
            values,
            normalized: false,
        }
    }
}

impl Measurements for VideoTensor {
    const DIMS: usize = 2;

    fn to_frames(&self) -> Frames {
        let (r, c, n) = self.values.dim();
        let mut f = Frames::zeros(r, c, n);
        for k in 0..n {
            let frame = f.frame_mut(k);
            for i in 0..r {
                for j in 0..c {
                    frame[i * c + j] = self.values[[i, j, k]];
                }
            }
        }
        f
    }

    fn from_frames(frames: Frames) -> Self {
        let (r, c, n) = (frames.rows, frames.cols, frames.n);
        let values = Array3::from_shape_fn((r, c, n), |(i, j, k)| frames.frame(k)[i * c + j]);
        VideoTensor { values }
    }
}
