//! Cyclic column shift operator and Lipschitz shift vectors.
//!
//! `S_lambda` rotates measurement `k` downward by `lambda_k` samples (and, for
//! frames, right by the second component). Shifts wrap around, so any integer
//! is valid and is reduced modulo the frame size.

use ndarray::{Array2, Array3};

use crate::data::{DataMatrix, Frames, Measurements, VideoTensor};
use crate::error::{OrkaError, Result};

/// A per-measurement shift. Component 0 moves along rows, component 1 along
/// columns (zero for one-dimensional data).
pub type Shift = [i64; 2];

/// Shift path of an object, anchored at `shifts[0] = 0` with consecutive
/// steps bounded by the Lipschitz constant in every component.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShiftVector {
    dims: usize,
    lipschitz: u32,
    shifts: Vec<Shift>,
}

impl ShiftVector {
    pub fn new_1d(shifts: Vec<i64>, lipschitz: u32) -> Result<Self> {
        Self::from_shifts(1, shifts.into_iter().map(|s| [s, 0]).collect(), lipschitz)
    }

    pub fn new_2d(rows: Vec<i64>, cols: Vec<i64>, lipschitz: u32) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(OrkaError::shape(rows.len(), cols.len()));
        }
        let shifts = rows.into_iter().zip(cols).map(|(r, c)| [r, c]).collect();
        Self::from_shifts(2, shifts, lipschitz)
    }

    pub(crate) fn from_shifts(dims: usize, shifts: Vec<Shift>, lipschitz: u32) -> Result<Self> {
        if dims != 1 && dims != 2 {
            return Err(OrkaError::InvalidParameter(format!(
                "dims must be 1 or 2, got {dims}"
            )));
        }
        if shifts.is_empty() {
            return Err(OrkaError::InvalidParameter(
                "shift vector must be non-empty".into(),
            ));
        }
        if shifts[0] != [0, 0] {
            return Err(OrkaError::InvalidParameter(format!(
                "shift vector must be anchored at zero, starts at {:?}",
                shifts[0]
            )));
        }
        if dims == 1 && shifts.iter().any(|s| s[1] != 0) {
            return Err(OrkaError::InvalidParameter(
                "1D shift with a column component".into(),
            ));
        }
        let c = i64::from(lipschitz);
        if let Some(k) = shifts
            .windows(2)
            .position(|w| (w[1][0] - w[0][0]).abs() > c || (w[1][1] - w[0][1]).abs() > c)
        {
            return Err(OrkaError::InvalidParameter(format!(
                "step {k}->{} exceeds the Lipschitz bound {lipschitz}",
                k + 1
            )));
        }
        Ok(ShiftVector {
            dims,
            lipschitz,
            shifts,
        })
    }

    /// Builds the path `lambda_0 = 0, lambda_{k+1} = lambda_k + steps[k]`.
    pub fn from_steps(dims: usize, steps: &[Shift], lipschitz: u32) -> Result<Self> {
        let mut shifts = Vec::with_capacity(steps.len() + 1);
        let mut acc = [0i64, 0];
        shifts.push(acc);
        for s in steps {
            acc = [acc[0] + s[0], acc[1] + s[1]];
            shifts.push(acc);
        }
        Self::from_shifts(dims, shifts, lipschitz)
    }

    pub fn zeros(n: usize, dims: usize) -> Self {
        ShiftVector {
            dims,
            lipschitz: 0,
            shifts: vec![[0, 0]; n.max(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn lipschitz_bound(&self) -> u32 {
        self.lipschitz
    }

    pub fn get(&self, k: usize) -> Shift {
        self.shifts[k]
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.shifts
    }

    /// Shifts along one axis.
    pub fn axis(&self, axis: usize) -> Vec<i64> {
        self.shifts.iter().map(|s| s[axis]).collect()
    }

    /// Consecutive differences `lambda_{k+1} - lambda_k`.
    pub fn steps(&self) -> Vec<Shift> {
        self.shifts
            .windows(2)
            .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
            .collect()
    }

    pub fn negated(&self) -> Vec<Shift> {
        self.shifts.iter().map(|s| [-s[0], -s[1]]).collect()
    }
}

#[inline]
fn wrap(i: i64, len: usize) -> usize {
    i.rem_euclid(len as i64) as usize
}

/// Writes frame `src` rotated by `shift` into `dst`.
pub(crate) fn shift_frame_into(
    src: &[f64],
    rows: usize,
    cols: usize,
    shift: Shift,
    dst: &mut [f64],
) {
    let dr = wrap(shift[0], rows);
    let dc = wrap(shift[1], cols);
    for p in 0..rows {
        let sp = (p + rows - dr) % rows;
        let drow = &mut dst[p * cols..(p + 1) * cols];
        let srow = &src[sp * cols..(sp + 1) * cols];
        if dc == 0 {
            drow.copy_from_slice(srow);
        } else {
            drow[dc..].copy_from_slice(&srow[..cols - dc]);
            drow[..dc].copy_from_slice(&srow[cols - dc..]);
        }
    }
}

impl Frames {
    /// Applies `S_shifts` frame by frame.
    pub(crate) fn shifted(&self, shifts: &[Shift]) -> Result<Frames> {
        if shifts.len() != self.n {
            return Err(OrkaError::shape(self.n, shifts.len()));
        }
        let mut out = Frames::zeros(self.rows, self.cols, self.n);
        let len = self.frame_len();
        for (k, s) in shifts.iter().enumerate() {
            shift_frame_into(
                self.frame(k),
                self.rows,
                self.cols,
                *s,
                &mut out.data[k * len..(k + 1) * len],
            );
        }
        Ok(out)
    }

    pub(crate) fn unshifted(&self, lambda: &ShiftVector) -> Result<Frames> {
        self.shifted(&lambda.negated())
    }
}

/// `S_lambda(A)`: rotates column `k` of `a` downward by `lambda[k]`.
pub fn shift_columns(a: &Array2<f64>, lambda: &[i64]) -> Result<Array2<f64>> {
    let (m, n) = a.dim();
    if lambda.len() != n {
        return Err(OrkaError::shape(format!("{n} shifts"), lambda.len()));
    }
    let mut out = Array2::zeros((m, n));
    if m == 0 {
        return Ok(out);
    }
    for (k, &s) in lambda.iter().enumerate() {
        let d = wrap(s, m);
        for i in 0..m {
            out[[(i + d) % m, k]] = a[[i, k]];
        }
    }
    Ok(out)
}

/// Applies a shift vector to a data matrix.
pub fn shift_matrix(d: &DataMatrix, lambda: &ShiftVector) -> Result<DataMatrix> {
    Ok(DataMatrix::from_frames(
        d.to_frames().shifted(lambda.shifts())?,
    ))
}

/// Two-dimensional cyclic shift of each frame of a video.
pub fn shift_frames(t: &Array3<f64>, shifts: &[Shift]) -> Result<Array3<f64>> {
    let v = VideoTensor::new(t.clone())?;
    Ok(VideoTensor::from_frames(v.to_frames().shifted(shifts)?).into_inner())
}
