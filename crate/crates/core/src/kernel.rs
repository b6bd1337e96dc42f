//! Entries of `(I + mu T)^{-1}`, where `T = tridiag(-1, [1, 2, ..., 2, 1], -1)`
//! is the second-difference matrix with constant boundary conditions.
//!
//! Indices are zero-based throughout. Two closed forms are provided: the
//! hyperbolic one is compact but overflows for large `n * phi`; the spectral
//! sum over the eigenpairs of `T` is the one used in production.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{OrkaError, Result};

/// Regularization weight of the total-change penalty. `Infinite` forces all
/// object columns to coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mu {
    Finite(f64),
    Infinite,
}

impl Mu {
    pub fn new(value: f64) -> Result<Mu> {
        if value.is_nan() || value < 0.0 {
            return Err(OrkaError::InvalidParameter(format!(
                "mu must be >= 0, got {value}"
            )));
        }
        Ok(if value.is_infinite() {
            Mu::Infinite
        } else {
            Mu::Finite(value)
        })
    }

    pub fn value(self) -> f64 {
        match self {
            Mu::Finite(v) => v,
            Mu::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Mu::Infinite)
    }

    /// `phi = arccosh(1 + 1/(2 mu))`, defined for `0 < mu < inf`.
    pub fn phi(self) -> Option<f64> {
        match self {
            Mu::Finite(v) if v > 0.0 => Some((1.0 + 0.5 / v).acosh()),
            _ => None,
        }
    }
}

impl fmt::Display for Mu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mu::Finite(v) => write!(f, "{v}"),
            Mu::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Mu {
    type Err = OrkaError;

    fn from_str(s: &str) -> Result<Mu> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(Mu::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| OrkaError::InvalidParameter(format!("cannot parse mu from {s:?}")))
                .and_then(Mu::new),
        }
    }
}

fn check_index(j: usize, k: usize, n: usize) -> Result<()> {
    if n == 0 || j >= n || k >= n {
        return Err(OrkaError::InvalidParameter(format!(
            "kernel index ({j}, {k}) out of range for n={n}"
        )));
    }
    Ok(())
}

/// Hyperbolic closed form
/// `[cosh((n-1-j-k) phi) + cosh((n-|j-k|) phi)] / [2 mu sinh(phi) sinh(n phi)]`.
///
/// Fails with [`OrkaError::KernelOverflow`] once the hyperbolic terms leave
/// the f64 range instead of returning `inf / inf`.
pub fn kernel_entry_hyperbolic(j: usize, k: usize, n: usize, mu: f64) -> Result<f64> {
    check_index(j, k, n)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(OrkaError::InvalidParameter(format!(
            "hyperbolic form needs 0 < mu < inf, got {mu}"
        )));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let phi = (1.0 + 0.5 / mu).acosh();
    let (jf, kf, nf) = (j as f64, k as f64, n as f64);
    let a = (nf - 1.0 - jf - kf) * phi;
    let b = (nf - (jf - kf).abs()) * phi;
    let num = a.cosh() + b.cosh();
    let den = 2.0 * mu * phi.sinh() * (nf * phi).sinh();
    let value = num / den;
    if !num.is_finite() || !den.is_finite() || !value.is_finite() {
        return Err(OrkaError::KernelOverflow {
            n,
            mu,
            n_phi: nf * phi,
        });
    }
    Ok(value)
}

/// Per-frequency denominators `1 + 4 mu sin^2(l pi / 2n)` for `l = 1..n-1`.
fn spectral_denominators(n: usize, mu: f64) -> Vec<f64> {
    (1..n)
        .map(|l| {
            let s = (l as f64 * PI / (2.0 * n as f64)).sin();
            1.0 + 4.0 * mu * s * s
        })
        .collect()
}

fn spectral_with(j: usize, k: usize, n: usize, denominators: &[f64]) -> f64 {
    let nf = n as f64;
    let diff = j as f64 - k as f64;
    let sum = (j + k + 1) as f64;
    let acc: f64 = denominators
        .iter()
        .enumerate()
        .map(|(i, den)| {
            let l = (i + 1) as f64;
            ((l * diff * PI / nf).cos() + (l * sum * PI / nf).cos()) / den
        })
        .sum();
    // entries are nonnegative; cancellation can leave about -1e-15 far from the diagonal
    ((1.0 + acc) / nf).max(0.0)
}

/// Spectral form `1/n + 1/n sum_l [cos(l(j-k)pi/n) + cos(l(j+k+1)pi/n)] / (1 + 4 mu sin^2(l pi/2n))`.
pub fn kernel_entry_spectral(j: usize, k: usize, n: usize, mu: Mu) -> Result<f64> {
    check_index(j, k, n)?;
    match mu {
        Mu::Infinite => Ok(1.0 / n as f64),
        Mu::Finite(0.0) => Ok(if j == k { 1.0 } else { 0.0 }),
        Mu::Finite(v) => Ok(spectral_with(j, k, n, &spectral_denominators(n, v))),
    }
}

/// Banded table of kernel weights `w_jk` for `|j - k| <= band_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    n: usize,
    mu: Mu,
    band_width: usize,
    phi: Option<f64>,
    // entries[d][i] = w_{i, i+d}
    entries: Vec<Vec<f64>>,
}

impl KernelWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> Mu {
        self.mu
    }

    pub fn band_width(&self) -> usize {
        self.band_width
    }

    pub fn phi(&self) -> Option<f64> {
        self.phi
    }

    /// `w_jk`, or `None` outside the band.
    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
        if hi >= self.n {
            return None;
        }
        self.entries.get(hi - lo).map(|row| row[lo])
    }

    /// `w_{j, j-gap}` without bounds juggling; `gap` must be within the band.
    #[inline]
    pub(crate) fn lower(&self, j: usize, gap: usize) -> f64 {
        self.entries[gap][j - gap]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.entries[0]
    }
}

/// Tabulates the kernel band needed by the K-approximation. `k_band` is
/// clamped to `n - 1`.
pub fn build_kernel(n: usize, mu: Mu, k_band: usize) -> Result<KernelWeights> {
    if n == 0 {
        return Err(OrkaError::InvalidParameter(
            "kernel size must be >= 1".into(),
        ));
    }
    let band_width = k_band.min(n - 1);
    let entries = match mu {
        Mu::Infinite => (0..=band_width)
            .map(|d| vec![1.0 / n as f64; n - d])
            .collect(),
        Mu::Finite(0.0) => (0..=band_width)
            .map(|d| vec![if d == 0 { 1.0 } else { 0.0 }; n - d])
            .collect(),
        Mu::Finite(v) => {
            let den = spectral_denominators(n, v);
            (0..=band_width)
                .map(|d| {
                    (0..n - d)
                        .map(|i| spectral_with(i, i + d, n, &den))
                        .collect()
                })
                .collect()
        }
    };
    Ok(KernelWeights {
        n,
        mu,
        band_width,
        phi: mu.phi(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    /// Dense `(I + mu T)^{-1}` by LU factorization.
    fn dense_inverse(n: usize, mu: f64) -> DMatrix<f64> {
        let mut a = DMatrix::<f64>::identity(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i)] += mu;
            a[(i + 1, i + 1)] += mu;
            a[(i, i + 1)] -= mu;
            a[(i + 1, i)] -= mu;
        }
        a.lu().try_inverse().unwrap()
    }

    #[test]
    fn parses_mu() {
        assert_eq!("inf".parse::<Mu>().unwrap(), Mu::Infinite);
        assert_eq!("2.5".parse::<Mu>().unwrap(), Mu::Finite(2.5));
        assert!("-1".parse::<Mu>().is_err());
        assert!("abc".parse::<Mu>().is_err());
        assert_eq!(Mu::new(f64::INFINITY).unwrap(), Mu::Infinite);
    }

    #[test]
    fn phi_at_one_half() {
        // arccosh(2) = ln(2 + sqrt(3))
        let expected = (2.0f64 + 3.0f64.sqrt()).ln();
        assert!((Mu::Finite(0.5).phi().unwrap() - expected).abs() < 1e-15);
        assert!((expected - 1.316_957_896_92).abs() < 1e-10);
    }

    #[test]
    fn one_by_one_is_unity() {
        for mu in [1e-3, 1.0, 1e6] {
            assert_eq!(kernel_entry_hyperbolic(0, 0, 1, mu).unwrap(), 1.0);
            assert!((kernel_entry_spectral(0, 0, 1, Mu::Finite(mu)).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mu_is_identity() {
        for j in 0..5 {
            for k in 0..5 {
                let w = kernel_entry_spectral(j, k, 5, Mu::Finite(0.0)).unwrap();
                assert_eq!(w, if j == k { 1.0 } else { 0.0 });
            }
        }
        let kw = build_kernel(4, Mu::Finite(0.0), 3).unwrap();
        assert_eq!(kw.get(2, 2), Some(1.0));
        assert_eq!(kw.get(1, 3), Some(0.0));
    }

    #[test]
    fn infinite_mu_is_uniform() {
        let kw = build_kernel(6, Mu::Infinite, 2).unwrap();
        assert_eq!(kw.get(3, 5), Some(1.0 / 6.0));
        assert_eq!(kw.get(0, 3), None);
        assert!(kw.phi().is_none());
        // the hyperbolic form approaches 1/n
        let w = kernel_entry_hyperbolic(1, 4, 6, 1e9).unwrap();
        assert!((w - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn forms_agree_with_dense_inverse() {
        for n in [2usize, 3, 8, 17, 64] {
            for mu in [1e-3, 1.0, 1e3] {
                let inv = dense_inverse(n, mu);
                for j in 0..n {
                    for k in 0..n {
                        let s = kernel_entry_spectral(j, k, n, Mu::Finite(mu)).unwrap();
                        let h = kernel_entry_hyperbolic(j, k, n, mu).unwrap();
                        assert!(
                            (s - inv[(j, k)]).abs() < 1e-10,
                            "spectral n={n} mu={mu} ({j},{k})"
                        );
                        assert!(
                            (h - inv[(j, k)]).abs() < 1e-10,
                            "hyperbolic n={n} mu={mu} ({j},{k})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rows_sum_to_one_and_entries_symmetric_nonnegative() {
        for n in [1usize, 2, 31, 128] {
            for mu in [1e-3, 1.0, 1e3] {
                let den = spectral_denominators(n, mu);
                for j in 0..n {
                    let row: Vec<f64> = (0..n).map(|k| spectral_with(j, k, n, &den)).collect();
                    let sum: f64 = row.iter().sum();
                    assert!((sum - 1.0).abs() < 1e-10, "n={n} mu={mu} j={j} sum={sum}");
                    for (k, w) in row.iter().enumerate() {
                        assert!(*w >= 0.0);
                        assert!((w - spectral_with(k, j, n, &den)).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn hyperbolic_signals_overflow() {
        let err = kernel_entry_hyperbolic(0, 0, 400, 1e-3).unwrap_err();
        assert!(matches!(err, OrkaError::KernelOverflow { .. }));
        assert!(kernel_entry_hyperbolic(0, 0, 4, 0.0).is_err());
    }

    #[test]
    fn build_kernel_matches_dense_inverse() {
        let kw = build_kernel(16, Mu::Finite(1.0), 15).unwrap();
        let inv = dense_inverse(16, 1.0);
        for j in 0..16 {
            for k in 0..16 {
                assert!((kw.get(j, k).unwrap() - inv[(j, k)]).abs() < 1e-10);
            }
        }
        assert_eq!(kw.band_width(), 15);
        // clamped band
        assert_eq!(
            build_kernel(4, Mu::Finite(1.0), 10).unwrap().band_width(),
            3
        );
    }
}
