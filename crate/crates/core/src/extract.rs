//! End-to-end extraction: correlations, kernel band, longest path, then the
//! exact object solve. [`decompose`] peels objects off the residual one at a
//! time.

use std::time::{Duration, Instant};

use crate::data::{DataMatrix, Frames, Measurements, VideoTensor};
use crate::error::{OrkaError, Result};
use crate::graph::{longest_path_with, GraphConfig, MoveOrder, MoveSet, DEFAULT_NODE_BUDGET};
use crate::kernel::{build_kernel, Mu};
use crate::objective::{correlate_frames, full_objective_frames, CorrelationMethod};
use crate::par::Exec;
use crate::quadratic::object_for_shifts;
use crate::shift::ShiftVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionParams {
    pub mu: Mu,
    /// Maximum step `C` per component.
    pub lipschitz: u32,
    /// Band width `K`; clamped to `N - 1`.
    pub k_band: usize,
    pub node_budget: u64,
    /// Move enumeration order; `None` picks zero-first for the 2D `mu = inf`
    /// background pass and smallest-first otherwise.
    pub order: Option<MoveOrder>,
    pub method: CorrelationMethod,
    pub exec: Exec,
}

impl ExtractionParams {
    pub fn new(mu: Mu, lipschitz: u32, k_band: usize) -> Self {
        ExtractionParams {
            mu,
            lipschitz,
            k_band,
            node_budget: DEFAULT_NODE_BUDGET,
            order: None,
            method: CorrelationMethod::Auto,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(self, exec: Exec) -> Self {
        ExtractionParams { exec, ..self }
    }

    pub fn with_order(self, order: MoveOrder) -> Self {
        ExtractionParams {
            order: Some(order),
            ..self
        }
    }

    pub fn with_node_budget(self, node_budget: u64) -> Self {
        ExtractionParams {
            node_budget,
            ..self
        }
    }

    pub fn move_order(&self, dims: usize) -> MoveOrder {
        self.order.unwrap_or(if dims == 2 && self.mu.is_infinite() {
            MoveOrder::ZeroFirst
        } else {
            MoveOrder::SmallestFirst
        })
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub correlate: Duration,
    pub kernel: Duration,
    pub graph: Duration,
    pub solve: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectEstimate<T> {
    /// Object form per measurement, unshifted.
    pub u: T,
    pub lambda: ShiftVector,
    /// `||S_{-lambda}(D) - U||^2 + mu total_change(U)`; for `mu = inf` the
    /// fidelity term alone.
    pub objective: f64,
    /// `tau_K` at `lambda` for the band width actually used.
    pub tau: f64,
    pub k_band: usize,
    pub partition_sizes: Vec<usize>,
    pub timings: StageTimings,
}

impl<T: Measurements> ObjectEstimate<T> {
    /// The object in data coordinates, `S_lambda(U)`.
    pub fn shifted(&self) -> Result<T> {
        Ok(T::from_frames(
            self.u.to_frames().shifted(self.lambda.shifts())?,
        ))
    }
}

pub fn extract<T: Measurements>(d: &T, p: &ExtractionParams) -> Result<ObjectEstimate<T>> {
    let f = d.to_frames();
    let (u, est) = extract_frames(&f, T::DIMS, p)?;
    Ok(ObjectEstimate {
        u: T::from_frames(u),
        lambda: est.lambda,
        objective: est.objective,
        tau: est.tau,
        k_band: est.k_band,
        partition_sizes: est.partition_sizes,
        timings: est.timings,
    })
}

/// Single-object extraction from a data matrix.
pub fn orka_extract(d: &DataMatrix, p: &ExtractionParams) -> Result<ObjectEstimate<DataMatrix>> {
    extract(d, p)
}

/// Single-object extraction from a video; frames are the measurements and
/// every frame moves by a two-component shift.
pub fn extract_video(t: &VideoTensor, p: &ExtractionParams) -> Result<ObjectEstimate<VideoTensor>> {
    extract(t, p)
}

pub(crate) fn extract_frames(
    f: &Frames,
    dims: usize,
    p: &ExtractionParams,
) -> Result<(Frames, ObjectEstimate<()>)> {
    let n = f.len();
    let k = p.k_band.min(n.saturating_sub(1));
    if k == 0 && n > 1 {
        return Err(OrkaError::InvalidParameter("K must be >= 1".into()));
    }
    let mut timings = StageTimings::default();

    let (lambda, tau, partition_sizes) = if p.mu == Mu::Finite(0.0) {
        // the kernel is the identity and every path is optimal; keep the trivial one
        let diag: f64 = (0..n)
            .map(|j| f.frame(j).iter().map(|v| v * v).sum::<f64>())
            .sum();
        (ShiftVector::zeros(n, dims), diag, vec![1; n])
    } else {
        let t = Instant::now();
        let band = correlate_frames(f, dims, p.lipschitz, k, p.method, p.exec)?;
        timings.correlate = t.elapsed();

        let t = Instant::now();
        let kernel = build_kernel(n, p.mu, k)?;
        timings.kernel = t.elapsed();

        let t = Instant::now();
        let moves = MoveSet::new(dims, p.lipschitz, p.move_order(dims))?;
        let cfg = GraphConfig {
            node_budget: p.node_budget,
            exec: p.exec,
        };
        let path = longest_path_with(&band, &kernel, &moves, k, &cfg)?;
        timings.graph = t.elapsed();
        let tau = path.tau(&band, &kernel);
        (path.shifts, tau, path.partition_sizes)
    };

    let t = Instant::now();
    let u = object_for_shifts(f, &lambda, p.mu, p.exec)?;
    let objective = full_objective_frames(&u, &lambda, f, p.mu)?;
    timings.solve = t.elapsed();

    Ok((
        u,
        ObjectEstimate {
            u: (),
            lambda,
            objective,
            tau,
            k_band: k,
            partition_sizes,
            timings,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub objects: Vec<ObjectEstimate<T>>,
    pub residual: T,
    /// `||S_lambda(U)||_F^2` per object.
    pub energies: Vec<f64>,
    /// `||residual||_F` after each extraction.
    pub residual_norms: Vec<f64>,
}

impl<T: Measurements> Decomposition<T> {
    /// Sum of all extracted objects in data coordinates.
    pub fn reconstruction(&self) -> Result<T> {
        let mut acc = self.residual.to_frames();
        acc.data.iter_mut().for_each(|v| *v = 0.0);
        for o in &self.objects {
            acc.add_assign(&o.u.to_frames().shifted(o.lambda.shifts())?);
        }
        Ok(T::from_frames(acc))
    }
}

/// Extracts one object per entry of `params`, each from the residual left by
/// the previous ones.
pub fn decompose<T: Measurements>(d: &T, params: &[ExtractionParams]) -> Result<Decomposition<T>> {
    let mut residual = d.to_frames();
    let mut objects = Vec::with_capacity(params.len());
    let mut energies = Vec::with_capacity(params.len());
    let mut residual_norms = Vec::with_capacity(params.len());
    for p in params {
        let (u, est) = extract_frames(&residual, T::DIMS, p)?;
        let object = u.shifted(est.lambda.shifts())?;
        energies.push(object.norm_sq());
        residual = residual.sub(&object);
        residual_norms.push(residual.norm_sq().sqrt());
        objects.push(ObjectEstimate {
            u: T::from_frames(u),
            lambda: est.lambda,
            objective: est.objective,
            tau: est.tau,
            k_band: est.k_band,
            partition_sizes: est.partition_sizes,
            timings: est.timings,
        });
    }
    Ok(Decomposition {
        objects,
        residual: T::from_frames(residual),
        energies,
        residual_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::build_kernel;
    use crate::objective::{correlate_band, tau_k};
    use crate::oracle::{brute_force_objective, BruteForceConfig};
    use crate::shift::shift_columns;
    use ndarray::{Array1, Array2, Array3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(Array2::from_shape_fn((m, n), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap()
        .normalized()
    }

    #[test]
    fn zero_mu_returns_the_data() {
        let d = random(8, 5, 1);
        let e = orka_extract(&d, &ExtractionParams::new(Mu::Finite(0.0), 1, 3)).unwrap();
        assert_eq!(e.lambda.axis(0), vec![0; 5]);
        assert!(e.objective.abs() < 1e-24);
        assert_eq!(e.u.values(), d.values());
    }

    #[test]
    fn matches_objective_oracle() {
        for seed in 0..5 {
            let d = random(16, 8, 10 + seed);
            let p = ExtractionParams::new(Mu::Finite(1.0), 1, 7);
            let e = orka_extract(&d, &p).unwrap();
            let moves = MoveSet::new(1, 1, MoveOrder::SmallestFirst).unwrap();
            let b =
                brute_force_objective(&d, Mu::Finite(1.0), &moves, &BruteForceConfig::default())
                    .unwrap();
            assert!((e.objective - b.value).abs() < 1e-9 * b.value.abs().max(1.0));
        }
    }

    #[test]
    fn objective_agrees_with_reduction() {
        let d = random(10, 6, 3);
        for mu in [0.3, 2.0, 50.0] {
            let e = orka_extract(&d, &ExtractionParams::new(Mu::Finite(mu), 1, 2)).unwrap();
            let band = correlate_band(&d, 1, 5, CorrelationMethod::Direct).unwrap();
            let kernel = build_kernel(6, Mu::Finite(mu), 5).unwrap();
            let reduced = d.frobenius_norm().powi(2) - tau_k(&e.lambda, &band, &kernel).unwrap();
            assert!((e.objective - reduced).abs() <= 1e-9 * reduced.abs().max(1.0));
        }
    }

    #[test]
    fn shifted_constant_object_is_removed_completely() {
        let m = 24;
        let u = Array1::from_shape_fn(m, |i| (-((i as f64 - 8.0).powi(2)) / 6.0).exp());
        let nu = vec![0i64, 1, 2, 2, 1, 0, -1, -2];
        let base = Array2::from_shape_fn((m, nu.len()), |(i, _)| u[i]);
        let d = DataMatrix::new(shift_columns(&base, &nu).unwrap()).unwrap();
        let dec = decompose(&d, &[ExtractionParams::new(Mu::Infinite, 1, 3)]).unwrap();
        assert!(dec.residual.frobenius_norm() <= 1e-9 * d.frobenius_norm());
        let got = dec.objects[0].lambda.axis(0);
        let offset = got[0] - nu[0];
        assert!(got.iter().zip(&nu).all(|(g, t)| g - t == offset));
    }

    #[test]
    fn reconstruction_identity() {
        let d = random(20, 9, 4);
        let params = [
            ExtractionParams::new(Mu::Infinite, 1, 3),
            ExtractionParams::new(Mu::Finite(1.0), 2, 2),
            ExtractionParams::new(Mu::Finite(0.1), 1, 4),
        ];
        let dec = decompose(&d, &params).unwrap();
        let rebuilt = &dec.reconstruction().unwrap().into_inner() + dec.residual.values();
        let err = (&rebuilt - d.values()).mapv(|v| v * v).sum().sqrt();
        assert!(err <= 1e-12 * d.frobenius_norm());
        assert_eq!(dec.energies.len(), 3);
    }

    #[test]
    fn residual_norm_does_not_grow_at_zero_mu() {
        let d = random(12, 6, 5);
        let dec = decompose(&d, &[ExtractionParams::new(Mu::Finite(0.0), 1, 2)]).unwrap();
        assert!(dec.residual.frobenius_norm() < 1e-12);
    }

    #[test]
    fn empty_decomposition_keeps_the_data() {
        let d = random(6, 4, 6);
        let dec = decompose(&d, &[]).unwrap();
        assert_eq!(dec.residual.values(), d.values());
        assert!(dec
            .reconstruction()
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn static_video_has_no_drift() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let frame = Array2::from_shape_fn((6, 5), |_| rng.random_range(0.0..1.0));
        let t =
            VideoTensor::new(Array3::from_shape_fn((6, 5, 4), |(i, j, _)| frame[[i, j]])).unwrap();
        let e = extract_video(&t, &ExtractionParams::new(Mu::Infinite, 1, 2)).unwrap();
        assert!(e.lambda.shifts().iter().all(|s| *s == [0, 0]));
        for k in 0..4 {
            for i in 0..6 {
                for j in 0..5 {
                    assert!((e.u.values()[[i, j, k]] - frame[[i, j]]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn budget_error_propagates() {
        let d = random(8, 8, 8);
        let p = ExtractionParams::new(Mu::Finite(1.0), 1, 6).with_node_budget(10);
        assert!(matches!(
            orka_extract(&d, &p),
            Err(OrkaError::NodeBudgetExceeded { nodes: 243, .. })
        ));
    }
}
