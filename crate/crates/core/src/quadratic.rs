//! The object solve for a fixed shift vector.
//!
//! With `X = S_{-lambda}(D)`, every row (pixel) of the object satisfies
//! `(I + mu T) u = x`, a symmetric positive definite tridiagonal system shared
//! by all rows. It is factored once and applied row by row.

use ndarray::Array2;

use crate::data::{DataMatrix, Frames, Measurements};
use crate::error::{OrkaError, Result};
use crate::kernel::Mu;
use crate::par::{self, Exec};
use crate::shift::ShiftVector;

/// LDL-style factorization of `I + mu T` for the two-sweep (Thomas) solve.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    off: f64,
    // c'_i of the forward sweep and 1 / pivot_i
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(n: usize, mu: f64) -> Result<Self> {
        if n == 0 || !(mu >= 0.0 && mu.is_finite()) {
            return Err(OrkaError::InvalidParameter(format!(
                "tridiagonal system needs n >= 1 and finite mu >= 0 (n={n}, mu={mu})"
            )));
        }
        let off = -mu;
        let diag = |i: usize| {
            if n == 1 {
                1.0
            } else if i == 0 || i == n - 1 {
                1.0 + mu
            } else {
                1.0 + 2.0 * mu
            }
        };
        let mut upper = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = diag(i) - off * prev;
            inv_pivot[i] = 1.0 / pivot;
            prev = off / pivot;
            upper[i] = prev;
        }
        Ok(TridiagonalFactor {
            off,
            upper,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        debug_assert_eq!(n, self.upper.len());
        let mut prev = 0.0;
        for (r, p) in rhs.iter_mut().zip(&self.inv_pivot) {
            prev = (*r - self.off * prev) * p;
            *r = prev;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// Computes `(I + mu T) x` directly.
pub fn apply_system(x: &[f64], mu: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut v = x[i];
            if i > 0 {
                v += mu * (x[i] - x[i - 1]);
            }
            if i + 1 < n {
                v += mu * (x[i] - x[i + 1]);
            }
            v
        })
        .collect()
}

const ROWS_PER_TASK: usize = 64;

/// Solves `(I + mu T) u_p = x_p` for every pixel `p` of an already unshifted stack.
pub(crate) fn solve_frames(x: &Frames, mu: f64, exec: Exec) -> Result<Frames> {
    let n = x.n;
    let len = x.frame_len();
    let factor = TridiagonalFactor::new(n, mu)?;
    // pixel-major copy so each system is contiguous
    let mut rows = vec![0.0; len * n];
    for k in 0..n {
        for (p, v) in x.frame(k).iter().enumerate() {
            rows[p * n + k] = *v;
        }
    }
    par::for_each_chunk(exec, &mut rows, ROWS_PER_TASK * n, |_, chunk| {
        for row in chunk.chunks_mut(n) {
            factor.solve_in_place(row);
        }
    });
    let mut out = Frames::zeros(x.rows, x.cols, n);
    for k in 0..n {
        for (p, v) in out.frame_mut(k).iter_mut().enumerate() {
            *v = rows[p * n + k];
        }
    }
    Ok(out)
}

/// Every frame replaced by the mean frame.
pub(crate) fn mean_frames(x: &Frames) -> Frames {
    let len = x.frame_len();
    let mut mean = vec![0.0; len];
    for k in 0..x.n {
        for (m, v) in mean.iter_mut().zip(x.frame(k)) {
            *m += v;
        }
    }
    let scale = 1.0 / x.n as f64;
    mean.iter_mut().for_each(|m| *m *= scale);
    let mut out = Frames::zeros(x.rows, x.cols, x.n);
    for k in 0..x.n {
        out.frame_mut(k).copy_from_slice(&mean);
    }
    out
}

/// Optimal object for fixed shifts: the tridiagonal solve for finite `mu`,
/// the mean projection for `mu = inf`.
pub(crate) fn object_for_shifts(
    d: &Frames,
    lambda: &ShiftVector,
    mu: Mu,
    exec: Exec,
) -> Result<Frames> {
    let x = d.unshifted(lambda)?;
    match mu {
        Mu::Finite(v) => solve_frames(&x, v, exec),
        Mu::Infinite => Ok(mean_frames(&x)),
    }
}

pub(crate) fn total_change_frames(u: &Frames) -> f64 {
    (1..u.n)
        .map(|k| {
            u.frame(k - 1)
                .iter()
                .zip(u.frame(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Solves the row-separable quadratic problem for `U` at fixed `lambda`.
pub fn solve_shifted_quadratic(
    d: &DataMatrix,
    lambda: &ShiftVector,
    mu: Mu,
) -> Result<Array2<f64>> {
    let f = d.to_frames();
    let u = object_for_shifts(&f, lambda, mu, Exec::default())?;
    Ok(DataMatrix::from_frames(u).into_inner())
}

/// `sum_k ||U_:k - U_:(k+1)||^2`.
pub fn total_change(u: &Array2<f64>) -> f64 {
    let n = u.ncols();
    (1..n)
        .map(|k| {
            let diff = &u.column(k - 1) - &u.column(k);
            diff.dot(&diff)
        })
        .sum()
}

/// Every column set to the mean column of `S_{-lambda}(D)`.
pub fn mean_projection(d: &DataMatrix, lambda: &ShiftVector) -> Result<Array2<f64>> {
    let x = d.to_frames().unshifted(lambda)?;
    Ok(DataMatrix::from_frames(mean_frames(&x)).into_inner())
}
