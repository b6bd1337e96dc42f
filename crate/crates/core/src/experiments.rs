//! Runtime scaling and approximation-error experiments.

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::graph::{longest_path_with, GraphConfig, MoveOrder, MoveSet};
use crate::kernel::{build_kernel, KernelWeights, Mu};
use crate::objective::{correlate_band, tau_k, CorrelationBand, CorrelationMethod};
use crate::oracle::{brute_force_tau, BruteForceConfig};
use crate::par::Exec;
use crate::synth::random_normalized;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub param: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub m: usize,
    pub c: u32,
    pub mu: Mu,
    pub seed: u64,
    /// Each measurement is repeated until at least this much time was spent
    /// on it; the fastest run is reported.
    pub min_time: Duration,
    pub exec: Exec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            m: 64,
            c: 1,
            mu: Mu::Finite(1.0),
            seed: 0,
            min_time: Duration::from_millis(50),
            exec: Exec::Sequential,
        }
    }
}

/// Inputs of one graph-stage measurement.
struct Case {
    band: CorrelationBand,
    kernel: KernelWeights,
    moves: MoveSet,
    k: usize,
}

impl Case {
    fn new(n: usize, k: usize, cfg: &BenchConfig) -> Result<Self> {
        let d = random_normalized(cfg.m, n, cfg.seed);
        let k = k.min(n.saturating_sub(1));
        Ok(Case {
            band: correlate_band(&d, cfg.c, k, CorrelationMethod::Auto)?,
            kernel: build_kernel(n, cfg.mu, k)?,
            moves: MoveSet::new(1, cfg.c, MoveOrder::SmallestFirst)?,
            k,
        })
    }
}

/// Fastest graph-stage time of each case. Cases are run round robin so that
/// slow phases of the machine hit all of them alike.
fn time_cases(cases: &[Case], cfg: &BenchConfig) -> Result<Vec<f64>> {
    let gcfg = GraphConfig {
        exec: cfg.exec,
        ..GraphConfig::default()
    };
    let mut best = vec![f64::INFINITY; cases.len()];
    let mut spent = vec![Duration::ZERO; cases.len()];
    let mut rounds = 0;
    while rounds < 3 || spent.iter().any(|s| *s < cfg.min_time) {
        for (i, c) in cases.iter().enumerate() {
            if rounds >= 3 && spent[i] >= cfg.min_time {
                continue;
            }
            let t = Instant::now();
            std::hint::black_box(longest_path_with(&c.band, &c.kernel, &c.moves, c.k, &gcfg)?);
            let e = t.elapsed();
            spent[i] += e;
            best[i] = best[i].min(e.as_secs_f64());
        }
        rounds += 1;
    }
    Ok(best)
}

/// Graph-stage time on an `m x n` random matrix for each `K`.
pub fn bench_k(n: usize, ks: &[usize], cfg: &BenchConfig) -> Result<Vec<Timing>> {
    let cases = ks
        .iter()
        .map(|&k| Case::new(n, k, cfg))
        .collect::<Result<Vec<_>>>()?;
    let times = time_cases(&cases, cfg)?;
    Ok(ks
        .iter()
        .zip(times)
        .map(|(&k, seconds)| Timing { param: k, seconds })
        .collect())
}

/// Graph-stage time at fixed `K` for each number of measurements `N`.
pub fn bench_n(ns: &[usize], k: usize, cfg: &BenchConfig) -> Result<Vec<Timing>> {
    let cases = ns
        .iter()
        .map(|&n| Case::new(n, k, cfg))
        .collect::<Result<Vec<_>>>()?;
    let times = time_cases(&cases, cfg)?;
    Ok(ns
        .iter()
        .zip(times)
        .map(|(&n, seconds)| Timing { param: n, seconds })
        .collect())
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub k: usize,
    pub mu: f64,
    /// Mean of `tau_{N-1}(lambda*_{N-1}) - tau_{N-1}(lambda*_K)` over trials.
    pub mean_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub m: usize,
    pub n: usize,
    pub c: u32,
    pub trials: usize,
    pub rows: Vec<OracleRow>,
}

/// Approximation error of the `K`-graph against the exhaustive optimum on
/// random normalized matrices, for every `K` in `ks` and `mu` in `mus`.
pub fn compare_oracle(
    m: usize,
    n: usize,
    c: u32,
    trials: usize,
    mus: &[f64],
    ks: &[usize],
    seed: u64,
) -> Result<OracleComparison> {
    let full = n.saturating_sub(1);
    let moves = MoveSet::new(1, c, MoveOrder::SmallestFirst)?;
    let mut sums = vec![vec![0.0; ks.len()]; mus.len()];
    let mut maxes = vec![vec![0.0f64; ks.len()]; mus.len()];
    for t in 0..trials {
        let d = random_normalized(m, n, seed.wrapping_add(t as u64));
        let band_full = correlate_band(&d, c, full, CorrelationMethod::Direct)?;
        for (mi, &mu) in mus.iter().enumerate() {
            let mu_v = Mu::new(mu)?;
            let kernel_full = build_kernel(n, mu_v, full)?;
            let optimum = brute_force_tau(
                &band_full,
                &kernel_full,
                &moves,
                &BruteForceConfig::default(),
            )?
            .value;
            for (ki, &k) in ks.iter().enumerate() {
                let k = k.min(full);
                let band = correlate_band(&d, c, k, CorrelationMethod::Direct)?;
                let kernel = build_kernel(n, mu_v, k)?;
                let path = longest_path_with(&band, &kernel, &moves, k, &GraphConfig::default())?;
                let err = optimum - tau_k(&path.shifts, &band_full, &kernel_full)?;
                sums[mi][ki] += err;
                maxes[mi][ki] = maxes[mi][ki].max(err);
            }
        }
    }
    let mut rows = Vec::new();
    for (mi, &mu) in mus.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            rows.push(OracleRow {
                k,
                mu,
                mean_error: sums[mi][ki] / trials.max(1) as f64,
                max_error: maxes[mi][ki],
            });
        }
    }
    Ok(OracleComparison {
        m,
        n,
        c,
        trials,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        assert!((slope(&[1.0, 2.0, 3.0], &[2.0, 4.5, 7.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bench_rows_are_positive() {
        let cfg = BenchConfig {
            min_time: Duration::from_millis(1),
            ..BenchConfig::default()
        };
        let rows = bench_k(16, &[2, 3], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.seconds > 0.0));
        assert_eq!(bench_n(&[8, 16], 2, &cfg).unwrap().len(), 2);
    }

    #[test]
    fn full_band_error_vanishes() {
        let r = compare_oracle(10, 6, 1, 4, &[1.0, 100.0], &[1, 3, 5], 3).unwrap();
        assert_eq!(r.rows.len(), 6);
        for row in &r.rows {
            assert!(row.mean_error >= -1e-12);
            if row.k == 5 {
                assert!(row.max_error.abs() < 1e-12);
            }
        }
    }
}
