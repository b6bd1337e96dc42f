//! Exhaustive reference solvers and the truncation error bounds.
//!
//! Everything here enumerates all `(2C+1)^((N-1) dims)` anchored Lipschitz
//! paths, so it is only usable on small instances. The enumeration is split by
//! the first step; partial results are reduced in enumeration order so ties
//! always resolve to the lexicographically first path.

use crate::data::{DataMatrix, Frames, Measurements};
use crate::error::{OrkaError, Result};
use crate::graph::{MoveOrder, MoveSet};
use crate::kernel::{build_kernel, kernel_entry_spectral, KernelWeights, Mu};
use crate::objective::{
    correlate_band, correlate_frames, full_objective_frames, tau_k, CorrelationBand,
    CorrelationMethod,
};
use crate::par::{self, Exec};
use crate::quadratic::object_for_shifts;
use crate::shift::{Shift, ShiftVector};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceConfig {
    /// Maximum number of candidate paths.
    pub budget: u64,
    pub exec: Exec,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        BruteForceConfig {
            budget: DEFAULT_ENUMERATION_BUDGET,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub shifts: ShiftVector,
    pub value: f64,
    pub candidates: u128,
}

/// Number of anchored paths over `n` measurements.
pub fn candidate_count(n: usize, moves: usize) -> u128 {
    (moves as u128)
        .checked_pow(n.saturating_sub(1) as u32)
        .unwrap_or(u128::MAX)
}

/// Maximizes `score` over every anchored path; first maximizer wins.
fn enumerate_best<F>(
    n: usize,
    moves: &MoveSet,
    cfg: &BruteForceConfig,
    score: F,
) -> Result<BruteForceResult>
where
    F: Fn(&ShiftVector) -> Result<f64> + Sync + Send,
{
    let b = moves.len();
    let candidates = candidate_count(n, b);
    if candidates > u128::from(cfg.budget) {
        return Err(OrkaError::EnumerationBudgetExceeded {
            candidates,
            budget: cfg.budget,
        });
    }
    if n <= 1 {
        let shifts = ShiftVector::zeros(n, moves.dims());
        let value = score(&shifts)?;
        return Ok(BruteForceResult {
            shifts,
            value,
            candidates,
        });
    }
    let (dims, c) = (moves.dims(), moves.lipschitz());
    let set = moves.moves();
    let partial = par::map_indices(cfg.exec, b, |first| -> Result<(Vec<Shift>, f64)> {
        let mut digits = vec![0usize; n - 2];
        let mut steps: Vec<Shift> = vec![set[first]; n - 1];
        let mut best: Option<(Vec<Shift>, f64)> = None;
        loop {
            for (s, &d) in steps[1..].iter_mut().zip(&digits) {
                *s = set[d];
            }
            let lam = ShiftVector::from_steps(dims, &steps, c)?;
            let v = score(&lam)?;
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((steps.clone(), v));
            }
            // odometer, last step fastest
            let mut i = digits.len();
            loop {
                if i == 0 {
                    return Ok(best.expect("at least one candidate"));
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < b {
                    break;
                }
                digits[i] = 0;
            }
        }
    });
    let mut best: Option<(Vec<Shift>, f64)> = None;
    for p in partial {
        let (steps, v) = p?;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((steps, v));
        }
    }
    let (steps, value) = best.expect("b >= 1");
    Ok(BruteForceResult {
        shifts: ShiftVector::from_steps(dims, &steps, c)?,
        value,
        candidates,
    })
}

/// Maximum of `tau_K` over all paths, with `K` the band width of `band`.
pub fn brute_force_tau(
    band: &CorrelationBand,
    kernel: &KernelWeights,
    moves: &MoveSet,
    cfg: &BruteForceConfig,
) -> Result<BruteForceResult> {
    enumerate_best(band.n(), moves, cfg, |lam| tau_k(lam, band, kernel))
}

/// The path maximizing `tau_K` for a data matrix, together with its value.
pub fn brute_force_best_lambda(
    d: &DataMatrix,
    mu: Mu,
    c: u32,
    k_band: usize,
) -> Result<(ShiftVector, f64)> {
    let k = k_band.min(d.cols() - 1);
    let band = correlate_band(d, c, k, CorrelationMethod::Direct)?;
    let kernel = build_kernel(d.cols(), mu, k)?;
    let moves = MoveSet::new(1, c, MoveOrder::SmallestFirst)?;
    let r = brute_force_tau(&band, &kernel, &moves, &BruteForceConfig::default())?;
    Ok((r.shifts, r.value))
}

/// Minimum of the full objective over all paths, the object being solved
/// exactly for each candidate. `value` is the minimal objective.
pub fn brute_force_objective<D: Measurements>(
    d: &D,
    mu: Mu,
    moves: &MoveSet,
    cfg: &BruteForceConfig,
) -> Result<BruteForceResult> {
    if moves.dims() != D::DIMS {
        return Err(OrkaError::InvalidParameter(format!(
            "{}D moves for {}D measurements",
            moves.dims(),
            D::DIMS
        )));
    }
    let f = d.to_frames();
    let objective = |lam: &ShiftVector| objective_at(&f, lam, mu);
    let mut r = enumerate_best(f.len(), moves, cfg, |lam| objective(lam).map(|v| -v))?;
    r.value = -r.value;
    Ok(r)
}

fn objective_at(f: &Frames, lam: &ShiftVector, mu: Mu) -> Result<f64> {
    let u = object_for_shifts(f, lam, mu, Exec::Sequential)?;
    full_objective_frames(&u, lam, f, mu)
}

/// The constants of the truncation error bounds for given `N`, `K`, `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundReport {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub phi: f64,
    /// `G(mu, N) = 1 / (mu sinh(phi) sinh(N phi))`.
    pub g: f64,
    /// `G (N-K)^2 2 e^{(N-K) phi}`.
    pub bound_exp: f64,
    /// `G (N-K)^2 e^{(N-K)^2 phi^2 / 2}`.
    pub bound_gauss: f64,
    /// Minimum of the two forms.
    pub theorem_bound: f64,
}

impl ErrorBoundReport {
    /// Bound on `|tau_{N-1}(lambda) - tau_K(lambda)|` for a single path,
    /// exponential form.
    pub fn truncation_exp(&self) -> f64 {
        self.bound_exp / 2.0
    }

    /// Same, Gaussian form.
    pub fn truncation_gauss(&self) -> f64 {
        self.bound_gauss / 2.0
    }

    pub fn truncation_bound(&self) -> f64 {
        self.theorem_bound / 2.0
    }
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-2.0 * x).exp().ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn ln_g(n: usize, mu: f64, phi: f64) -> f64 {
    -(mu.ln() + ln_sinh(phi) + ln_sinh(n as f64 * phi))
}

fn check_mu(mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(OrkaError::InvalidParameter(format!(
            "bounds need 0 < mu < inf, got {mu}"
        )));
    }
    Ok((1.0 + 1.0 / (2.0 * mu)).acosh())
}

/// `G(mu, N)`, evaluated in log space.
pub fn g_factor(n: usize, mu: f64) -> Result<f64> {
    let phi = check_mu(mu)?;
    if n == 0 {
        return Err(OrkaError::InvalidParameter("n must be >= 1".into()));
    }
    Ok(ln_g(n, mu, phi).exp())
}

pub fn error_bounds(n: usize, k: usize, mu: f64) -> Result<ErrorBoundReport> {
    let phi = check_mu(mu)?;
    if k + 1 >= n {
        return Err(OrkaError::BoundsUndefined { n, k });
    }
    let lg = ln_g(n, mu, phi);
    let r = (n - k) as f64;
    let bound_exp = (lg + 2.0 * r.ln() + std::f64::consts::LN_2 + r * phi).exp();
    let bound_gauss = (lg + 2.0 * r.ln() + r * r * phi * phi / 2.0).exp();
    Ok(ErrorBoundReport {
        n,
        k,
        mu,
        phi,
        g: lg.exp(),
        bound_exp,
        bound_gauss,
        theorem_bound: bound_exp.min(bound_gauss),
    })
}

/// Both sides of the optimality-gap bound on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    /// `tau_{N-1}` at the exact optimum.
    pub optimum: f64,
    /// `tau_{N-1}` at the best `K`-approximation path.
    pub attained: f64,
    pub gap: f64,
    /// `None` when `K >= N-1`, where the gap must vanish.
    pub bounds: Option<ErrorBoundReport>,
    pub holds: bool,
}

pub const THEOREM_TOLERANCE: f64 = 1e-9;

pub fn verify_theorem(d: &DataMatrix, mu: f64, c: u32, k: usize) -> Result<TheoremCheck> {
    for col in d.values().columns() {
        if col.dot(&col) > 1.0 + 1e-12 {
            return Err(OrkaError::InvalidParameter(
                "columns must satisfy ||D_:k|| <= 1".into(),
            ));
        }
    }
    let n = d.cols();
    let full = n.saturating_sub(1);
    let k = k.min(full);
    let mu_v = Mu::new(mu)?;
    let band = correlate_band(d, c, full, CorrelationMethod::Direct)?;
    let kernel = build_kernel(n, mu_v, full)?;
    let (best_k, _) = brute_force_best_lambda(d, mu_v, c, k)?;
    let (_, optimum) = brute_force_best_lambda(d, mu_v, c, full)?;
    let attained = tau_k(&best_k, &band, &kernel)?;
    let gap = optimum - attained;
    let bounds = if k < full {
        Some(error_bounds(n, k, mu)?)
    } else {
        None
    };
    let limit = bounds.map_or(0.0, |b| b.theorem_bound);
    Ok(TheoremCheck {
        optimum,
        attained,
        gap,
        bounds,
        holds: gap <= limit + THEOREM_TOLERANCE,
    })
}

/// Truncation error on the all-ones matrix against its two-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllOnesDiagnostic {
    /// `|tau_{N-1} - tau_K|` for unit columns of equal entries.
    pub truncation: f64,
    /// `sum_{|j-k| > K} w_jk`.
    pub out_of_band: f64,
    /// `G (N-K)^2 e^{(N-K) phi / 2} / 8`.
    pub lower_bound: f64,
    pub upper_bound: f64,
}

pub fn all_ones_diagnostic(m: usize, n: usize, k: usize, mu: f64) -> Result<AllOnesDiagnostic> {
    let report = error_bounds(n, k, mu)?;
    let d = DataMatrix::new(ndarray::Array2::from_elem((m, n), 1.0))?.normalized();
    let full = n - 1;
    let band = correlate_band(&d, 0, full, CorrelationMethod::Direct)?;
    let zero = ShiftVector::zeros(n, 1);
    let mu_v = Mu::Finite(mu);
    let t_full = tau_k(&zero, &band, &build_kernel(n, mu_v, full)?)?;
    let band_k = correlate_band(&d, 0, k, CorrelationMethod::Direct)?;
    let t_k = tau_k(&zero, &band_k, &build_kernel(n, mu_v, k)?)?;
    let mut out_of_band = 0.0;
    for j in 0..n {
        for i in 0..n {
            if j.abs_diff(i) > k {
                out_of_band += kernel_entry_spectral(j, i, n, mu_v)?;
            }
        }
    }
    let r = (n - k) as f64;
    Ok(AllOnesDiagnostic {
        truncation: (t_full - t_k).abs(),
        out_of_band,
        lower_bound: report.g * r * r * (r * report.phi / 2.0).exp() / 8.0,
        upper_bound: report.truncation_bound(),
    })
}

/// Best `tau_K` by enumeration, for either kind of measurements.
pub fn brute_force_tau_of<D: Measurements>(
    d: &D,
    mu: Mu,
    c: u32,
    k: usize,
    cfg: &BruteForceConfig,
) -> Result<BruteForceResult> {
    let f = d.to_frames();
    let dims = D::DIMS;
    let band = correlate_frames(&f, dims, c, k, CorrelationMethod::Direct, cfg.exec)?;
    let kernel = build_kernel(f.len(), mu, k)?;
    let moves = MoveSet::new(dims, c, MoveOrder::SmallestFirst)?;
    brute_force_tau(&band, &kernel, &moves, cfg)
}
