use hciz::dp::{dp_rank_k_projection, DpConfig};
use hciz::fiber::sample_fiber;
use hciz::gt::{
    build_polytope, default_equality_tol, rayleigh_map, type_vector, uniform_gt_sample,
};
use hciz::io::{matrices_to_csv, matrices_to_json, parse_matrices, parse_matrices_csv};
use hciz::linalg::{hermitian_eigendecompose, sample_haar_unitary, HermitianMatrix};
use hciz::orbit::{log_partition, sample_orbit, OrbitProblem};
use hciz::sampler::{Mode, SamplerConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sorted spectrum of length 1..=5, with ties likely.
fn spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), -3.0..3.0f64], 1..=5).prop_map(
        |mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v
        },
    )
}

fn random_hermitian(lambda: &[f64], seed: u64) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sample_haar_unitary(lambda.len(), &mut rng).unwrap();
    HermitianMatrix::from_real_diagonal(lambda)
        .unwrap()
        .conjugate_by(&u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rayleigh_triangles_lie_in_their_polytope(lambda in spectrum(), seed in any::<u64>()) {
        let x = random_hermitian(&lambda, seed);
        let p = rayleigh_map(&x);
        let poly = build_polytope(&lambda, 1e-8).unwrap();
        prop_assert!(p.is_interlacing(1e-9));
        let diag = x.diagonal();
        for (t, d) in type_vector(&p).iter().zip(&diag) {
            prop_assert!((t - d).abs() < 1e-9);
        }
        for (a, b) in p.top_row().iter().zip(poly.lambda()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fiber_samples_reproduce_the_triangle(lambda in spectrum(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = build_polytope(&lambda, default_equality_tol(&lambda)).unwrap();
        let p = uniform_gt_sample(&poly, &mut rng);
        let s = sample_fiber(&p, &mut rng).unwrap();
        prop_assert!(rayleigh_map(&s).max_abs_diff(&p) < 1e-8);
    }

    #[test]
    fn eigendecomposition_reconstructs(lambda in spectrum(), seed in any::<u64>()) {
        let x = random_hermitian(&lambda, seed);
        let d = hermitian_eigendecompose(&x).unwrap();
        prop_assert!(d.eigenvectors.defect() < 1e-10);
        let back = d.reconstruct();
        let err = (back.as_matrix() - x.as_matrix()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err < 1e-10);
        for w in d.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn orbit_samples_keep_the_spectrum(
        lambda in spectrum(),
        y in prop::collection::vec(-2.0..2.0f64, 5),
        inf in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let n = lambda.len();
        let prob = OrbitProblem::diagonal(lambda.clone(), y[..n].to_vec()).unwrap();
        let mode = if inf { Mode::Inf } else { Mode::Tv };
        let cfg = SamplerConfig::new(mode, 0.2).with_burn_in(30);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample_orbit(&prob, &cfg, &mut rng).unwrap();
        let scale = lambda.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x.eigenvalues().iter().zip(&lambda) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn partition_function_symmetry_and_shift(
        y in prop::collection::vec(-2.0..2.0f64, 3),
        lambda in prop::collection::vec(-2.0..2.0f64, 3),
        c in -3.0..3.0f64,
    ) {
        let a = log_partition(&y, &lambda).unwrap();
        let b = log_partition(&lambda, &y).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let s = log_partition(&shifted, &lambda).unwrap();
        prop_assert!((s - a - c * lambda.iter().sum::<f64>()).abs() < 1e-8 * (1.0 + a.abs() + s.abs()));
    }

    #[test]
    fn mechanism_outputs_projections(
        gamma in prop::collection::vec(0.0..5.0f64, 2..=4),
        eps in 0.05..50.0f64,
        k_frac in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let d = gamma.len();
        let k = 1 + ((d as f64 * k_frac) as usize).min(d - 1);
        let a = random_hermitian(&gamma, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let template = SamplerConfig::inf(1.0).with_burn_in(30);
        let s = dp_rank_k_projection(&a, &DpConfig::new(eps, k), &template, &mut rng).unwrap();
        prop_assert!(s.is_valid(), "defect {}", s.defect());
    }

    #[test]
    fn serialization_round_trips_exactly(lambda in spectrum(), seed in any::<u64>()) {
        let xs = vec![random_hermitian(&lambda, seed), random_hermitian(&lambda, seed ^ 1)];
        prop_assert_eq!(&parse_matrices(&matrices_to_json(&xs)).unwrap(), &xs);
        prop_assert_eq!(&parse_matrices_csv(&matrices_to_csv(&xs)).unwrap(), &xs);
    }
}
