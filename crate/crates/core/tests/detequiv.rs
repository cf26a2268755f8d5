mod common;

use common::{identity_model, marchenko_pastur_rate, random_model, scalar_model};
use mimo_deteq::channel::{ChannelModel, FadingKind, SystemDims};
use mimo_deteq::detequiv::*;
use mimo_deteq::linalg::{frobenius, spectral_norm_herm, CMatrix};
use mimo_deteq::montecarlo::{ergodic_sum_rate_mc, McConfig};
use mimo_deteq::scenario::table_one;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_CONJUGATE: f64 = 0.618_033_988_749_894_8;

#[test]
fn scalar_fixed_point_and_rate_match_closed_forms() {
    let model = scalar_model();
    let rate = deterministic_sum_rate(&model, 1.0, &SolverConfig::new(1.0)).unwrap();
    let e_oracle = (5f64.sqrt() - 1.0) / 2.0;
    assert!((rate.solution.e(0, 0) - e_oracle).abs() < 1e-10);
    assert!((rate.solution.e_tilde(0, 0) - e_oracle).abs() < 1e-10);
    assert!((rate.v - marchenko_pastur_rate(1.0, 1.0, 1.0)).abs() < 1e-6);
    let closed = 2.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln() - (5f64.sqrt() - 1.0).powi(2) / 4.0;
    assert!((rate.v - closed).abs() < 1e-10);
    assert!((rate.v - 0.580_458).abs() < 1e-6);
}

#[test]
fn identity_model_follows_marchenko_pastur_across_snr() {
    let model = identity_model(8);
    for sigma2 in [0.01, 0.1, 1.0, 10.0] {
        let rate = deterministic_sum_rate(&model, sigma2, &SolverConfig::new(sigma2)).unwrap();
        let oracle = marchenko_pastur_rate(8.0, 8.0, sigma2);
        assert!((rate.v - oracle).abs() < 1e-9, "σ²={sigma2}: {} vs {oracle}", rate.v);
    }
}

#[test]
fn rectangular_identity_model_follows_marchenko_pastur() {
    let dims = SystemDims::new(vec![6], vec![3]).unwrap();
    let model = ChannelModel::from_matrices(
        dims,
        vec![vec![(
            mimo_deteq::linalg::identity(6),
            mimo_deteq::linalg::identity(3),
            CMatrix::zeros(6, 3),
        )]],
    )
    .unwrap();
    let rate = deterministic_sum_rate(&model, 0.5, &SolverConfig::new(0.5)).unwrap();
    assert!((rate.v - marchenko_pastur_rate(6.0, 3.0, 0.5)).abs() < 1e-9);
}

#[test]
fn identity_model_stieltjes() {
    let sol = solve_fixed_point(&identity_model(8), &SolverConfig::new(1.0)).unwrap();
    assert!((deterministic_stieltjes(&sol) - GOLDEN_CONJUGATE).abs() < 1e-10);
    let far = solve_fixed_point(&scalar_model(), &SolverConfig::new(1e6)).unwrap();
    let m = deterministic_stieltjes(&far);
    assert!((0.999e-6..=1e-6).contains(&m));
}

#[test]
fn table_one_forms_agree_on_snr_grid() {
    for kappa in [0.0, 1.0] {
        let model = table_one(2, kappa).build().unwrap();
        for i in 0..20 {
            let snr_db = -10.0 + 40.0 * i as f64 / 19.0;
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            let rate = deterministic_sum_rate(&model, sigma2, &SolverConfig::new(sigma2)).unwrap();
            assert!((rate.v17a - rate.v17b).abs() < 1e-8, "κ={kappa} snr={snr_db}");
        }
    }
}

#[test]
fn derivative_identity_on_several_models() {
    let models = [
        scalar_model(),
        table_one(2, 0.0).build().unwrap(),
        table_one(2, 1.0).build().unwrap(),
        random_model(5, vec![3, 2], vec![2, 3], true),
        random_model(6, vec![4], vec![2, 2, 1], false),
    ];
    for (i, model) in models.iter().enumerate() {
        for sigma2 in [0.3, 1.0] {
            let check = check_shannon_derivative(model, sigma2, 1e-4 * sigma2, &SolverConfig::new(sigma2)).unwrap();
            assert!(check.rel_err < 1e-5, "model {i}, σ²={sigma2}: {check:?}");
            assert!(check.analytic < 0.0);
        }
    }
}

#[test]
fn los_identity_holds_at_solution() {
    for seed in 0..10 {
        let model = random_model(seed, vec![2, 3], vec![3, 1], true);
        let sol = solve_fixed_point(&model, &SolverConfig::new(0.7)).unwrap();
        let hbar = model.hbar_full();
        let lhs = sol.phi_tilde() * hbar.adjoint() * sol.psi();
        let rhs = sol.psi_tilde() * hbar.adjoint() * sol.phi();
        assert!(frobenius(&(lhs - rhs)) < 1e-10, "seed {seed}");
    }
}

#[test]
fn rate_decreases_with_noise() {
    for model in [table_one(2, 1.0).build().unwrap(), random_model(3, vec![2, 2], vec![3], true)] {
        let mut prev = f64::INFINITY;
        for i in 0..15 {
            let sigma2 = 10f64.powf(-2.0 + 0.3 * i as f64);
            let v = deterministic_sum_rate(&model, sigma2, &SolverConfig::new(sigma2)).unwrap().v;
            assert!(v < prev);
            prev = v;
        }
    }
}

#[test]
fn spectral_bounds_and_positivity() {
    let model = table_one(2, 1.0).build().unwrap();
    for omega in [0.05, 1.0, 20.0] {
        let sol = solve_fixed_point(&model, &SolverConfig::new(omega)).unwrap();
        assert!(spectral_norm_herm(sol.psi()) <= 1.0 / omega + 1e-12);
        assert!(spectral_norm_herm(sol.psi_tilde()) <= 1.0 / omega + 1e-12);
        assert!(sol.state.e.iter().chain(&sol.state.e_tilde).all(|&x| x > 0.0));
        assert!(sol.residual <= 10.0 * SolverConfig::DEFAULT_TOLERANCE);
    }
}

#[test]
fn variance_profile_degeneracy_matches_monte_carlo() {
    // Single-antenna sets and users: H has independent entries with variance
    // profile σ²_{l,k}, the classical non-separable variance-profile model.
    let size = 64;
    let dims = SystemDims::uniform(size, size, 1).unwrap();
    let links = (0..size)
        .map(|l| {
            (0..size)
                .map(|k| {
                    let phase = 2.0 * std::f64::consts::PI * (l as f64 - k as f64) / size as f64;
                    let profile = (1.0 + 0.8 * phase.cos()) / size as f64;
                    (
                        CMatrix::from_element(1, 1, profile.into()),
                        CMatrix::from_element(1, 1, 1.0.into()),
                        CMatrix::zeros(1, 1),
                    )
                })
                .collect()
        })
        .collect();
    let model = ChannelModel::from_matrices(dims, links).unwrap();
    let v = deterministic_sum_rate(&model, 0.5, &SolverConfig::new(0.5)).unwrap().v;
    let mc = ergodic_sum_rate_mc(&model, &McConfig::new(1000, 21, FadingKind::Gaussian, 0.5)).unwrap();
    assert!(((mc.mean - v) / v).abs() < 0.01, "det {v} vs mc {} ± {}", mc.mean, mc.std_error);
}

fn check_unique(model: &ChannelModel, omega: f64, seed: u64) {
    let reference = solve_fixed_point(model, &SolverConfig::new(omega)).unwrap();
    let links = reference.state.e.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let init = FixedPointState {
            e: (0..links).map(|_| rng.random_range(0.01..50.0)).collect(),
            e_tilde: (0..links).map(|_| rng.random_range(0.01..50.0)).collect(),
        };
        let sol = solve_fixed_point_from(model, &SolverConfig::new(omega), init).unwrap();
        for (a, b) in sol.state.e.iter().chain(&sol.state.e_tilde).zip(reference.state.e.iter().chain(&reference.state.e_tilde)) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn fixed_point_is_unique_on_table_one() {
    for kappa in [0.0, 1.0] {
        check_unique(&table_one(2, kappa).build().unwrap(), 1.0, 4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_point_is_unique_on_random_models(seed in 0u64..10_000, omega in 0.05f64..5.0, los in any::<bool>()) {
        let model = random_model(seed, vec![2, 3], vec![2, 2], los);
        check_unique(&model, omega, seed);
    }

    #[test]
    fn forms_agree_on_random_models(seed in 0u64..10_000, sigma2 in 0.01f64..10.0) {
        let model = random_model(seed, vec![3, 1], vec![2, 3], true);
        let rate = deterministic_sum_rate(&model, sigma2, &SolverConfig::new(sigma2)).unwrap();
        prop_assert!((rate.v17a - rate.v17b).abs() < 1e-8);
        prop_assert!(rate.v > 0.0);
    }
}
