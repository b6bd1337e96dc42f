//! Synthetic scenes with known ground truth, noise injection and PSNR.

use ndarray::{Array, Array1, Array2, Array3, Dimension};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{DataMatrix, VideoTensor};
use crate::error::{OrkaError, Result};
use crate::shift::{shift_columns, shift_frames, Shift, ShiftVector};

/// Diagonal matrix with ones separated by `0, 1, ..., max_gap` zeros.
///
/// For `max_gap = 14` this is `121 x 121` with 16 ones.
pub fn gap_matrix(max_gap: usize) -> DataMatrix {
    let mut diag = vec![1.0];
    for gap in 0..=max_gap {
        diag.extend(std::iter::repeat_n(0.0, gap));
        diag.push(1.0);
    }
    DataMatrix::new(Array2::from_diag(&Array1::from(diag))).expect("non-empty")
}

/// One Gaussian pulse moving through a pulse scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// Row of the peak in the first column.
    pub center: f64,
    /// Rows per column; the path is rounded to integers.
    pub velocity: f64,
    /// Standard deviation in rows.
    pub width: f64,
    pub amplitude: f64,
    /// Relative amplitude and width variation over the columns; 0 keeps the
    /// form constant.
    pub drift: f64,
    /// Period in rows of a cosine carrier under the Gaussian envelope;
    /// `None` gives a plain Gaussian.
    pub carrier: Option<f64>,
}

impl Pulse {
    pub fn new(center: f64, velocity: f64) -> Self {
        Pulse {
            center,
            velocity,
            width: 2.0,
            amplitude: 1.0,
            drift: 0.0,
            carrier: None,
        }
    }

    /// Integer path `round(velocity k)`, so the first entry is 0.
    pub fn path(&self, n: usize) -> Vec<i64> {
        (0..n)
            .map(|k| (self.velocity * k as f64).round() as i64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseScene {
    pub clean: DataMatrix,
    /// Each pulse alone, in data coordinates.
    pub components: Vec<Array2<f64>>,
    pub paths: Vec<Vec<i64>>,
}

/// Sum of shifted pulses on an `m x n` grid (cyclic in the rows).
pub fn pulse_scene(m: usize, n: usize, pulses: &[Pulse]) -> Result<PulseScene> {
    if m == 0 || n == 0 {
        return Err(OrkaError::shape("m, n >= 1", format!("{m}x{n}")));
    }
    let mut clean = Array2::zeros((m, n));
    let mut components = Vec::with_capacity(pulses.len());
    let mut paths = Vec::with_capacity(pulses.len());
    for p in pulses {
        let form = Array2::from_shape_fn((m, n), |(i, k)| {
            let t = if n > 1 {
                k as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let wobble = (std::f64::consts::PI * t).sin();
            let amp = p.amplitude * (1.0 + p.drift * wobble);
            let width = p.width * (1.0 + 0.5 * p.drift * wobble);
            let mut dist = (i as f64 - p.center).rem_euclid(m as f64);
            if dist > m as f64 / 2.0 {
                dist -= m as f64;
            }
            let wave = p
                .carrier
                .map_or(1.0, |t| (std::f64::consts::TAU * dist / t).cos());
            amp * wave * (-(dist * dist) / (2.0 * width * width)).exp()
        });
        let path = p.path(n);
        let shifted = shift_columns(&form, &path)?;
        clean += &shifted;
        components.push(shifted);
        paths.push(path);
    }
    Ok(PulseScene {
        clean: DataMatrix::new(clean)?,
        components,
        paths,
    })
}

/// Noise level giving an expected PSNR of `target_db` against `peak`.
pub fn noise_sigma(peak: f64, target_db: f64) -> f64 {
    peak / 10f64.powf(target_db / 20.0)
}

/// Adds i.i.d. Gaussian noise scaled for the given PSNR.
pub fn add_noise<D: Dimension>(
    clean: &Array<f64, D>,
    target_db: f64,
    seed: u64,
) -> Result<Array<f64, D>> {
    let peak = clean.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let normal = Normal::new(0.0, noise_sigma(peak, target_db))
        .map_err(|e| OrkaError::InvalidParameter(format!("noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(clean.mapv(|v| v + normal.sample(&mut rng)))
}

/// `10 log10(peak^2 * count / ||a - b||^2)` with `peak = max |a|`;
/// `+inf` for identical inputs.
pub fn psnr<D: Dimension>(reference: &Array<f64, D>, other: &Array<f64, D>) -> Result<f64> {
    if reference.shape() != other.shape() {
        return Err(OrkaError::shape(
            format!("{:?}", reference.shape()),
            format!("{:?}", other.shape()),
        ));
    }
    let err: f64 = reference
        .iter()
        .zip(other)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(10.0 * (peak * peak * reference.len() as f64 / err).log10())
}

/// Matrix with standard normal entries and unit columns.
pub fn random_normalized(m: usize, n: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_simple_fn((m.max(1), n.max(1)), || {
        rng.sample::<f64, _>(StandardNormal)
    });
    DataMatrix::new(values).expect("finite").normalized()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoScene {
    pub video: VideoTensor,
    pub background: Array2<f64>,
    /// The square alone, in data coordinates.
    pub foreground: Array3<f64>,
    /// Per-frame displacement of the square, anchored at 0.
    pub truth: ShiftVector,
}

const WAVES: usize = 6;

/// A bright square moving with constant integer velocity `(rows, cols)` per
/// frame over a smooth static background of the given amplitude.
pub fn moving_square(
    rows: usize,
    cols: usize,
    frames: usize,
    side: usize,
    velocity: Shift,
    background: f64,
    seed: u64,
) -> Result<VideoScene> {
    if rows == 0 || cols == 0 || frames == 0 || side == 0 || side > rows.min(cols) {
        return Err(OrkaError::InvalidParameter(
            "degenerate video geometry".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..WAVES)
        .map(|_| {
            (
                rng.random_range(2..=5) as f64,
                rng.random_range(-5..=5) as f64,
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let bg = Array2::from_shape_fn((rows, cols), |(i, j)| {
        let (y, x) = (i as f64 / rows as f64, j as f64 / cols as f64);
        let s: f64 = waves
            .iter()
            .map(|(fy, fx, ph, a)| a * (std::f64::consts::TAU * (fy * y + fx * x) + ph).sin())
            .sum();
        background * (0.5 + 0.5 * s / WAVES as f64)
    });
    let (r0, c0) = (rows / 4, cols / 4);
    let square = Array3::from_shape_fn((rows, cols, frames), |(i, j, _)| {
        if (r0..r0 + side).contains(&i) && (c0..c0 + side).contains(&j) {
            1.0
        } else {
            0.0
        }
    });
    let shifts: Vec<Shift> = (0..frames as i64)
        .map(|k| [velocity[0] * k, velocity[1] * k])
        .collect();
    let foreground = shift_frames(&square, &shifts)?;
    let video = &foreground + &bg.clone().insert_axis(ndarray::Axis(2));
    let c = velocity[0].unsigned_abs().max(velocity[1].unsigned_abs()) as u32;
    let rows_path = shifts.iter().map(|s| s[0]).collect();
    let cols_path = shifts.iter().map(|s| s[1]).collect();
    Ok(VideoScene {
        video: VideoTensor::new(video)?,
        background: bg,
        foreground,
        truth: ShiftVector::new_2d(rows_path, cols_path, c)?,
    })
}

/// Normalized Frobenius inner product of two equally shaped arrays.
pub fn similarity<D: Dimension>(a: &Array<f64, D>, b: &Array<f64, D>) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Fraction of positions where two paths agree up to one global offset,
/// taking the most common offset.
pub fn path_agreement(found: &[i64], truth: &[i64], modulus: i64) -> f64 {
    if found.is_empty() || found.len() != truth.len() {
        return 0.0;
    }
    let diffs: Vec<i64> = found
        .iter()
        .zip(truth)
        .map(|(f, t)| (f - t).rem_euclid(modulus.max(1)))
        .collect();
    let best = diffs
        .iter()
        .map(|d| diffs.iter().filter(|e| *e == d).count())
        .max()
        .unwrap_or(0);
    best as f64 / found.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_matrix_layout() {
        let d = gap_matrix(14);
        assert_eq!((d.rows(), d.cols()), (121, 121));
        let diag: Vec<f64> = d.values().diag().to_vec();
        assert_eq!(&diag[..3], &[1.0, 1.0, 0.0]);
        assert_eq!(diag.iter().filter(|v| **v == 1.0).count(), 16);
        let ones: Vec<usize> = (0..121).filter(|&i| diag[i] == 1.0).collect();
        let largest = ones.windows(2).map(|w| w[1] - w[0] - 1).max().unwrap();
        assert_eq!(largest, 14);
        let off: f64 = d.values().iter().sum::<f64>() - diag.iter().sum::<f64>();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn noiseless_scene_is_a_shifted_constant_form() {
        let s = pulse_scene(40, 10, &[Pulse::new(10.0, 0.7)]).unwrap();
        let first = s.clean.values().column(0).to_owned();
        let base = Array2::from_shape_fn((40, 10), |(i, _)| first[i]);
        assert_eq!(
            &shift_columns(&base, &s.paths[0]).unwrap(),
            s.clean.values()
        );
    }

    #[test]
    fn zero_velocity_gives_identical_columns() {
        let s = pulse_scene(20, 6, &[Pulse::new(5.0, 0.0)]).unwrap();
        for k in 1..6 {
            assert_eq!(s.clean.values().column(k), s.clean.values().column(0));
        }
    }

    #[test]
    fn noise_hits_the_target_psnr() {
        let s = pulse_scene(128, 64, &[Pulse::new(30.0, 0.5)]).unwrap();
        for (target, seed) in [(5.0, 1u64), (20.0, 2)] {
            let noisy = add_noise(s.clean.values(), target, seed).unwrap();
            let got = psnr(s.clean.values(), &noisy).unwrap();
            assert!((got - target).abs() < 0.2, "{got}");
        }
    }

    #[test]
    fn psnr_cases() {
        let a = Array2::from_elem((3, 4), 1.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &Array2::zeros((3, 4))).unwrap().abs() < 1e-12);
        assert!(psnr(&a, &Array2::zeros((4, 3))).is_err());
    }

    #[test]
    fn moving_square_truth() {
        let v = moving_square(16, 16, 5, 4, [1, 2], 0.0, 3).unwrap();
        assert_eq!(v.truth.axis(0), vec![0, 1, 2, 3, 4]);
        assert_eq!(v.truth.axis(1), vec![0, 2, 4, 6, 8]);
        let vals = v.video.values();
        assert_eq!(vals[[4, 4, 0]], 1.0);
        assert_eq!(vals[[5, 6, 1]], 1.0);
        assert_eq!(vals.iter().filter(|x| **x == 1.0).count(), 16 * 5);
    }

    #[test]
    fn agreement_quotients_the_offset() {
        assert_eq!(path_agreement(&[3, 4, 5, 9], &[0, 1, 2, 3], 100), 0.75);
        assert_eq!(path_agreement(&[0, 1], &[0, 1], 10), 1.0);
    }

    #[test]
    fn random_columns_are_unit() {
        let d = random_normalized(9, 4, 1);
        for c in d.values().columns() {
            assert!((c.dot(&c) - 1.0).abs() < 1e-12);
        }
    }
}
