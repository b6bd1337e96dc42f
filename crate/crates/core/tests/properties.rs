use ndarray::Array2;
use proptest::prelude::*;

use orka::graph::{longest_path_with, GraphConfig, MoveOrder, MoveSet};
use orka::oracle::{brute_force_tau, error_bounds, BruteForceConfig};
use orka::quadratic::apply_system;
use orka::synth::{self, path_agreement};
use orka::*;

fn mu_strategy() -> impl Strategy<Value = Mu> {
    prop_oneof![
        Just(Mu::Infinite),
        (1e-3..1e3f64).prop_map(Mu::Finite),
        Just(Mu::Finite(1e-6)),
    ]
}

fn lipschitz_path(n: usize, c: i64) -> impl Strategy<Value = ShiftVector> {
    proptest::collection::vec(-c..=c, n.saturating_sub(1)).prop_map(move |steps| {
        let mut v = vec![0i64];
        for s in steps {
            v.push(v.last().unwrap() + s);
        }
        ShiftVector::new_1d(v, c as u32).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_is_exact_for_its_band(
        m in 3usize..10,
        n in 2usize..7,
        seed in any::<u64>(),
        c in 1u32..3,
        k_pick in 0usize..8,
        mu in mu_strategy(),
        order in prop_oneof![Just(MoveOrder::SmallestFirst), Just(MoveOrder::ZeroFirst)],
    ) {
        let d = synth::random_normalized(m, n, seed);
        let k = 1 + k_pick % (n - 1);
        let moves = MoveSet::new(1, c, order).unwrap();
        let band = correlate_band(&d, c, k, CorrelationMethod::Direct).unwrap();
        let kernel = build_kernel(n, mu, k).unwrap();
        let path = longest_path_with(&band, &kernel, &moves, k, &GraphConfig::default()).unwrap();
        let graph = tau_k(&path.shifts, &band, &kernel).unwrap();
        let brute = brute_force_tau(&band, &kernel, &moves, &BruteForceConfig::default()).unwrap();
        prop_assert!((graph - brute.value).abs() <= 1e-9 * brute.value.abs().max(1.0));
        prop_assert_eq!(path.shifts.get(0), [0, 0]);
        prop_assert!(path.shifts.steps().iter().all(|s| s[0].unsigned_abs() <= c as u64));
    }

    #[test]
    fn gap_respects_the_bound(
        n in 4usize..8,
        seed in any::<u64>(),
        k_pick in 0usize..8,
        mu in 1e-2..1e2f64,
    ) {
        let d = synth::random_normalized(6, n, seed);
        let k = 1 + k_pick % (n - 2);
        let check = verify_theorem(&d, mu, 1, k).unwrap();
        let bound = error_bounds(n, k, mu).unwrap().theorem_bound;
        prop_assert!(check.gap >= -1e-9);
        prop_assert!(check.gap <= bound + 1e-9);
        prop_assert!(check.holds);
    }

    #[test]
    fn kernel_is_a_symmetric_averaging_operator(n in 1usize..40, mu in mu_strategy()) {
        let w = build_kernel(n, mu, n.saturating_sub(1)).unwrap();
        for j in 0..n {
            let mut sum = 0.0;
            for k in 0..n {
                let v = w.get(j, k).unwrap();
                prop_assert!(v >= 0.0);
                prop_assert!((v - w.get(k, j).unwrap()).abs() <= 1e-14);
                sum += v;
            }
            prop_assert!((sum - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn spectral_entries_solve_the_system(n in 1usize..30, mu in 1e-3..1e3f64, col in 0usize..30) {
        let col = col % n;
        let x: Vec<f64> = (0..n).map(|j| kernel_entry_spectral(j, col, n, Mu::Finite(mu)).unwrap()).collect();
        let y = apply_system(&x, mu);
        for (j, v) in y.iter().enumerate() {
            let e = if j == col { 1.0 } else { 0.0 };
            prop_assert!((v - e).abs() <= 1e-9, "row {}: {}", j, v);
        }
    }

    #[test]
    fn reduced_objective_matches_full(
        (n, lambda) in (2usize..7).prop_flat_map(|n| (Just(n), lipschitz_path(n, 2))),
        m in 2usize..9,
        seed in any::<u64>(),
        mu in 1e-3..1e3f64,
    ) {
        let d = synth::random_normalized(m, n, seed);
        let u = solve_shifted_quadratic(&d, &lambda, Mu::Finite(mu)).unwrap();
        let full = full_objective(&u, &lambda, &d, Mu::Finite(mu)).unwrap();
        let band = correlate_band(&d, 2, n - 1, CorrelationMethod::Direct).unwrap();
        let kernel = build_kernel(n, Mu::Finite(mu), n - 1).unwrap();
        let reduced = d.frobenius_norm().powi(2) - tau_k(&lambda, &band, &kernel).unwrap();
        prop_assert!((full - reduced).abs() <= 1e-9 * full.abs().max(1.0));
    }

    #[test]
    fn infinite_mu_object_is_the_mean_projection(
        (n, lambda) in (1usize..7).prop_flat_map(|n| (Just(n), lipschitz_path(n, 1))),
        m in 1usize..9,
        seed in any::<u64>(),
    ) {
        let d = synth::random_normalized(m, n, seed);
        let u = solve_shifted_quadratic(&d, &lambda, Mu::Infinite).unwrap();
        let mean = mean_projection(&d, &lambda).unwrap();
        prop_assert!(u.iter().zip(mean.iter()).all(|(a, b)| (a - b).abs() <= 1e-12));
        prop_assert!(total_change(&u) <= 1e-20);
    }

    #[test]
    fn fft_and_direct_correlations_agree(
        m in 1usize..40,
        n in 2usize..6,
        seed in any::<u64>(),
        c in 0u32..3,
    ) {
        let d = synth::random_normalized(m, n, seed);
        let k = n - 1;
        let a = correlate_band(&d, c, k, CorrelationMethod::Direct).unwrap();
        let b = correlate_band(&d, c, k, CorrelationMethod::Fft).unwrap();
        for j in 0..n {
            for g in 1..=k.min(j) {
                let r = a.radius(g);
                for l in -r..=r {
                    let x = a.correlation(j, j - g, [l, 0]).unwrap();
                    let y = b.correlation(j, j - g, [l, 0]).unwrap();
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn steps_round_trip((n, lambda) in (1usize..20).prop_flat_map(|n| (Just(n), lipschitz_path(n, 3)))) {
        let back = ShiftVector::from_steps(1, &lambda.steps(), 3).unwrap();
        prop_assert_eq!(back.len(), n);
        prop_assert_eq!(back, lambda);
    }

    #[test]
    fn path_agreement_ignores_a_global_offset(
        path in proptest::collection::vec(-50i64..50, 1..30),
        offset in -100i64..100,
        modulus in 1i64..64,
    ) {
        let moved: Vec<i64> = path.iter().map(|v| v + offset).collect();
        prop_assert_eq!(path_agreement(&moved, &path, modulus), 1.0);
    }

    #[test]
    fn psnr_of_identical_arrays_is_infinite(values in proptest::collection::vec(-5.0..5.0f64, 1..50)) {
        prop_assume!(values.iter().any(|v| *v != 0.0));
        let a = Array2::from_shape_vec((values.len(), 1), values).unwrap();
        prop_assert_eq!(synth::psnr(&a, &a).unwrap(), f64::INFINITY);
    }
}
