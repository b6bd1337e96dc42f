//! Banded shifted correlations between measurements and the K-approximation
//! objective built from them.
//!
//! For every pair `(j, k)` with `0 < j - k <= K` the band stores
//! `<D_j, S_s(D_k)>` for all lags `|s| <= C (j - k)` (per shift component).
//! The pair `(k, j)` follows from `<D_k, S_s(D_j)> = <D_j, S_{-s}(D_k)>`.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::data::{DataMatrix, Frames, Measurements};
use crate::error::{OrkaError, Result};
use crate::kernel::{KernelWeights, Mu};
use crate::par::{self, Exec};
use crate::quadratic::total_change_frames;
use crate::shift::{Shift, ShiftVector};

/// How the band of correlations is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationMethod {
    /// Dot products for the required lags only.
    Direct,
    /// Full circular cross-correlation per pair via FFT, then lag extraction.
    Fft,
    /// FFT once the lag window is wide compared to `log2` of the frame size.
    #[default]
    Auto,
}

/// Lag window above which `Auto` switches to FFT, in units of `log2(frame_len)`.
const FFT_WINDOW_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationBand {
    n: usize,
    band_width: usize,
    lipschitz: u32,
    dims: usize,
    // tables[g - 1][(j - g) * window(g) + lag_index]
    tables: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl CorrelationBand {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band_width(&self) -> usize {
        self.band_width
    }

    pub fn lipschitz(&self) -> u32 {
        self.lipschitz
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// `||D_j||^2` for every measurement.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Largest lag magnitude stored for column gap `g`.
    pub fn radius(&self, gap: usize) -> i64 {
        i64::from(self.lipschitz) * gap as i64
    }

    pub(crate) fn window(&self, gap: usize) -> usize {
        window_len(self.radius(gap), self.dims)
    }

    /// Number of stored off-diagonal values.
    pub fn table_len(&self) -> usize {
        self.tables.iter().map(Vec::len).sum()
    }

    #[inline]
    pub(crate) fn lag_index(&self, gap: usize, lag: Shift) -> Option<usize> {
        let r = self.radius(gap);
        let w = 2 * r + 1;
        if lag[0].abs() > r {
            return None;
        }
        if self.dims == 1 {
            return (lag[1] == 0).then_some((lag[0] + r) as usize);
        }
        if lag[1].abs() > r {
            return None;
        }
        Some(((lag[0] + r) * w + lag[1] + r) as usize)
    }

    /// All stored lags of the pair `(j, j - gap)`, indexed by `lag_index`.
    pub(crate) fn row(&self, j: usize, gap: usize) -> &[f64] {
        let w = self.window(gap);
        &self.tables[gap - 1][(j - gap) * w..(j - gap + 1) * w]
    }

    /// `<D_j, S_lag(D_{j-gap})>` for `1 <= gap <= K`; `None` outside the window.
    #[inline]
    pub(crate) fn lookup(&self, j: usize, gap: usize, lag: Shift) -> Option<f64> {
        let idx = self.lag_index(gap, lag)?;
        Some(self.tables[gap - 1][(j - gap) * self.window(gap) + idx])
    }

    /// `<D_j, S_lag(D_k)>` for any pair inside the band (including `j == k`
    /// at lag zero).
    pub fn correlation(&self, j: usize, k: usize, lag: Shift) -> Result<f64> {
        let out_of_band = || OrkaError::LagOutOfBand {
            j,
            k,
            lag,
            radius: self.radius(j.abs_diff(k)),
        };
        if j >= self.n || k >= self.n || j.abs_diff(k) > self.band_width {
            return Err(out_of_band());
        }
        match j.cmp(&k) {
            std::cmp::Ordering::Equal if lag == [0, 0] => Ok(self.diag[j]),
            std::cmp::Ordering::Equal => Err(out_of_band()),
            std::cmp::Ordering::Greater => self.lookup(j, j - k, lag).ok_or_else(out_of_band),
            std::cmp::Ordering::Less => self
                .lookup(k, k - j, [-lag[0], -lag[1]])
                .ok_or_else(out_of_band),
        }
    }
}

fn window_len(radius: i64, dims: usize) -> usize {
    let w = (2 * radius + 1) as usize;
    if dims == 1 {
        w
    } else {
        w * w
    }
}

/// Lags of the window in storage order.
fn window_lags(radius: i64, dims: usize) -> Vec<Shift> {
    let range = -radius..=radius;
    if dims == 1 {
        range.map(|a| [a, 0]).collect()
    } else {
        range
            .clone()
            .flat_map(|a| (-radius..=radius).map(move |b| [a, b]))
            .collect()
    }
}

fn dot_shifted(fj: &[f64], fk: &[f64], rows: usize, cols: usize, lag: Shift) -> f64 {
    let dr = lag[0].rem_euclid(rows as i64) as usize;
    let dc = lag[1].rem_euclid(cols as i64) as usize;
    let mut acc = 0.0;
    for p in 0..rows {
        let sp = (p + rows - dr) % rows;
        let a = &fj[p * cols..(p + 1) * cols];
        let b = &fk[sp * cols..(sp + 1) * cols];
        // a[q] * b[q - dc]
        acc += a[dc..]
            .iter()
            .zip(&b[..cols - dc])
            .map(|(x, y)| x * y)
            .sum::<f64>();
        acc += a[..dc]
            .iter()
            .zip(&b[cols - dc..])
            .map(|(x, y)| x * y)
            .sum::<f64>();
    }
    acc
}

struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            col_fwd: planner.plan_fft_forward(rows),
            row_inv: planner.plan_fft_inverse(cols),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (rf, cf) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        if self.cols > 1 {
            rf.process(buf);
        }
        if self.rows > 1 {
            let mut t = transpose(buf, self.rows, self.cols);
            cf.process(&mut t);
            buf.copy_from_slice(&transpose(&t, self.cols, self.rows));
        }
    }
}

fn transpose(buf: &[Complex<f64>], rows: usize, cols: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); buf.len()];
    for p in 0..rows {
        for q in 0..cols {
            out[q * rows + p] = buf[p * cols + q];
        }
    }
    out
}

fn validate_band_args(f: &Frames, k_band: usize) -> Result<()> {
    if f.n == 0 {
        return Err(OrkaError::InvalidParameter("no measurements".into()));
    }
    if k_band > f.n - 1 {
        return Err(OrkaError::InvalidParameter(format!(
            "band width {k_band} exceeds N-1 = {}",
            f.n - 1
        )));
    }
    Ok(())
}

pub(crate) fn correlate_frames(
    f: &Frames,
    dims: usize,
    c: u32,
    k_band: usize,
    method: CorrelationMethod,
    exec: Exec,
) -> Result<CorrelationBand> {
    validate_band_args(f, k_band)?;
    let (rows, cols, n) = (f.rows, f.cols, f.n);
    let len = f.frame_len();
    let diag: Vec<f64> = (0..n)
        .map(|k| f.frame(k).iter().map(|v| v * v).sum())
        .collect();

    let use_fft = |gap: usize| match method {
        CorrelationMethod::Direct => false,
        CorrelationMethod::Fft => true,
        CorrelationMethod::Auto => {
            let w = window_len(i64::from(c) * gap as i64, dims) as f64;
            w > FFT_WINDOW_FACTOR * (len.max(2) as f64).log2()
        }
    };
    let fft = (1..=k_band).any(use_fft).then(|| Fft2::new(rows, cols));
    let spectra: Vec<Vec<Complex<f64>>> = match &fft {
        Some(plan) => par::map_indices(exec, n, |k| {
            let mut buf: Vec<Complex<f64>> =
                f.frame(k).iter().map(|&v| Complex::new(v, 0.0)).collect();
            plan.transform(&mut buf, false);
            buf
        }),
        None => Vec::new(),
    };

    let mut tables = Vec::with_capacity(k_band);
    for gap in 1..=k_band {
        let radius = i64::from(c) * gap as i64;
        let lags = window_lags(radius, dims);
        let fft_here = use_fft(gap);
        let rows_per_pair: Vec<Vec<f64>> = par::map_indices(exec, n - gap, |k| {
            let j = k + gap;
            if fft_here {
                let plan = fft.as_ref().expect("planned");
                let mut buf: Vec<Complex<f64>> = spectra[j]
                    .iter()
                    .zip(&spectra[k])
                    .map(|(x, y)| x * y.conj())
                    .collect();
                plan.transform(&mut buf, true);
                let scale = 1.0 / len as f64;
                lags.iter()
                    .map(|lag| {
                        let a = lag[0].rem_euclid(rows as i64) as usize;
                        let b = lag[1].rem_euclid(cols as i64) as usize;
                        buf[a * cols + b].re * scale
                    })
                    .collect()
            } else {
                lags.iter()
                    .map(|&lag| dot_shifted(f.frame(j), f.frame(k), rows, cols, lag))
                    .collect()
            }
        });
        tables.push(rows_per_pair.concat());
    }
    Ok(CorrelationBand {
        n,
        band_width: k_band,
        lipschitz: c,
        dims,
        tables,
        diag,
    })
}

/// Precomputes the correlation band of a data matrix for Lipschitz constant
/// `c` and band width `k_band <= N - 1`.
pub fn correlate_band(
    d: &DataMatrix,
    c: u32,
    k_band: usize,
    method: CorrelationMethod,
) -> Result<CorrelationBand> {
    correlate_band_with(d, c, k_band, method, Exec::default())
}

pub fn correlate_band_with<D: Measurements>(
    d: &D,
    c: u32,
    k_band: usize,
    method: CorrelationMethod,
    exec: Exec,
) -> Result<CorrelationBand> {
    correlate_frames(&d.to_frames(), D::DIMS, c, k_band, method, exec)
}

/// The K-approximation `tau_K(lambda) = sum_{|j-k| <= K} w_jk <D_j, S_{lambda_j - lambda_k}(D_k)>`,
/// diagonal terms included. `K` is the band width of `band`.
pub fn tau_k(lambda: &ShiftVector, band: &CorrelationBand, kernel: &KernelWeights) -> Result<f64> {
    if kernel.band_width() < band.band_width || kernel.n() != band.n {
        return Err(OrkaError::InvalidParameter(format!(
            "kernel (n={}, K={}) does not cover band (n={}, K={})",
            kernel.n(),
            kernel.band_width(),
            band.n,
            band.band_width
        )));
    }
    if lambda.len() != band.n || lambda.dims() != band.dims {
        return Err(OrkaError::shape(
            format!("{} shifts of dim {}", band.n, band.dims),
            format!("{} shifts of dim {}", lambda.len(), lambda.dims()),
        ));
    }
    let mut diag = 0.0;
    for (j, d) in band.diag.iter().enumerate() {
        diag += kernel.lower(j, 0) * d;
    }
    let mut off = 0.0;
    for gap in 1..=band.band_width {
        for j in gap..band.n {
            let k = j - gap;
            let (a, b) = (lambda.get(j), lambda.get(k));
            let lag = [a[0] - b[0], a[1] - b[1]];
            let corr = band.lookup(j, gap, lag).ok_or(OrkaError::LagOutOfBand {
                j,
                k,
                lag,
                radius: band.radius(gap),
            })?;
            off += kernel.lower(j, gap) * corr;
        }
    }
    Ok(diag + 2.0 * off)
}

pub(crate) fn full_objective_frames(
    u: &Frames,
    lambda: &ShiftVector,
    d: &Frames,
    mu: Mu,
) -> Result<f64> {
    d.same_shape(u)?;
    let x = d.unshifted(lambda)?;
    let fidelity = x.sub(u).norm_sq();
    let change = total_change_frames(u);
    Ok(match mu {
        Mu::Finite(v) => fidelity + v * change,
        // constant objects carry no penalty; anything else is infeasible
        Mu::Infinite if change == 0.0 => fidelity,
        Mu::Infinite => f64::INFINITY,
    })
}

/// `||S_{-lambda}(D) - U||_F^2 + mu * total_change(U)`.
pub fn full_objective(
    u: &Array2<f64>,
    lambda: &ShiftVector,
    d: &DataMatrix,
    mu: Mu,
) -> Result<f64> {
    let uf = DataMatrix::new(u.clone())?.to_frames();
    full_objective_frames(&uf, lambda, &d.to_frames(), mu)
}
