mod common;

use common::{e_times_e1_of_one, identity_model, random_model, scalar_model};
use mimo_deteq::channel::{ChannelModel, FadingKind, SystemDims};
use mimo_deteq::detequiv::{deterministic_stieltjes, solve_fixed_point, SolverConfig};
use mimo_deteq::linalg::{trace_re, CMatrix};
use mimo_deteq::montecarlo::*;
use mimo_deteq::scenario::table_one;

#[test]
fn exponential_integral_oracle_value() {
    assert!((e_times_e1_of_one() - 0.596_347_362_323_194).abs() < 1e-12);
}

#[test]
fn scalar_rate_matches_exponential_integral() {
    let est = ergodic_sum_rate_mc(&scalar_model(), &McConfig::new(100_000, 1, FadingKind::Gaussian, 1.0)).unwrap();
    assert!((est.mean - e_times_e1_of_one()).abs() < 3.0 * est.std_error, "{est:?}");
}

#[test]
fn scalar_stieltjes_matches_exponential_integral() {
    let est = empirical_stieltjes_mc(&scalar_model(), &McConfig::new(100_000, 2, FadingKind::Gaussian, 1.0)).unwrap();
    assert!((est.mean - e_times_e1_of_one()).abs() < 3.0 * est.std_error, "{est:?}");
}

#[test]
fn stieltjes_at_large_omega() {
    let model = table_one(2, 1.0).build().unwrap();
    let omega = 1e6;
    let est = empirical_stieltjes_mc(&model, &McConfig::new(2000, 3, FadingKind::Gaussian, omega)).unwrap();
    assert!(est.mean >= 0.0 && est.mean <= 1.0 / omega);
    // E tr B = Σ tr R tr T / n_k + tr H̄H̄ᴴ = Σ_{l,k} g N_l.
    let dims = model.dims();
    let mut trace_b = 0.0;
    for l in 0..dims.sets() {
        for k in 0..dims.users() {
            trace_b += trace_re(model.r(l, k)) * trace_re(model.t(l, k)) / dims.n_per_user()[k] as f64
                + trace_re(&(model.hbar(l, k) * model.hbar(l, k).adjoint()));
        }
    }
    let expansion = 1.0 / omega - trace_b / (dims.total_rx() as f64 * omega * omega);
    assert!(((est.mean - expansion) / expansion).abs() < 1e-3);
}

#[test]
fn identity_model_stieltjes_close_to_deterministic() {
    let model = identity_model(8);
    let det = deterministic_stieltjes(&solve_fixed_point(&model, &SolverConfig::new(1.0)).unwrap());
    let est = empirical_stieltjes_mc(&model, &McConfig::new(10_000, 4, FadingKind::Gaussian, 1.0)).unwrap();
    assert!(((est.mean - det) / det).abs() < 0.02);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let model = random_model(8, vec![2, 3], vec![3, 2], true);
    let mut cfg = McConfig::new(3000, 77, FadingKind::NakagamiPhase { m: 0.5 }, 0.5);
    cfg.keep_samples = true;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ergodic_sum_rate_mc(&model, &cfg).unwrap())
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(one, many);
    assert_eq!(one.mean.to_bits(), many.mean.to_bits());
}

#[test]
fn input_covariance_is_applied() {
    let model = scalar_model();
    let q = mimo_deteq::optimizer::InputCovariances::new(vec![CMatrix::zeros(1, 1)]).unwrap();
    let est = ergodic_sum_rate_mc(&model, &McConfig::new(100, 1, FadingKind::Gaussian, 1.0).with_q(q)).unwrap();
    assert_eq!(est.mean, 0.0);
}

#[test]
fn doubling_samples_shrinks_standard_error() {
    let model = table_one(2, 0.0).build().unwrap();
    let a = ergodic_sum_rate_mc(&model, &McConfig::new(4000, 9, FadingKind::Gaussian, 1.0)).unwrap();
    let b = ergodic_sum_rate_mc(&model, &McConfig::new(8000, 9, FadingKind::Gaussian, 1.0)).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((ratio - 2f64.sqrt()).abs() < 0.15, "ratio {ratio}");
}

/// `L = K = 1` with `N = n = size`, exponential correlation on both sides.
fn correlated_model(size: usize) -> ChannelModel {
    let corr = |rho: f64| {
        CMatrix::from_fn(size, size, |i, j| rho.powi((i as i32 - j as i32).abs()).into())
    };
    let dims = SystemDims::uniform(1, 1, size).unwrap();
    ChannelModel::from_matrices(dims, vec![vec![(corr(0.5), corr(0.3), CMatrix::zeros(size, size))]]).unwrap()
}

#[test]
fn stieltjes_gap_shrinks_with_dimension() {
    let mut gaps = Vec::new();
    for size in [2, 4, 8] {
        let model = correlated_model(size);
        let det = deterministic_stieltjes(&solve_fixed_point(&model, &SolverConfig::new(0.5)).unwrap());
        let est = empirical_stieltjes_mc(&model, &McConfig::new(40_000, 13, FadingKind::Gaussian, 0.5)).unwrap();
        gaps.push((est.mean - det).abs());
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn fading_report_includes_every_kind() {
    let model = table_one(2, 1.0).build().unwrap();
    let kinds = [
        FadingKind::Gaussian,
        FadingKind::RayleighPhase,
        FadingKind::NakagamiPhase { m: 0.5 },
        FadingKind::LogNormalPhase { sigma_z: 0.5 },
    ];
    let report = fading_invariance_report(&model, 1.0, &kinds, 2000, 5).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.spread >= 0.0);
    for row in &report.rows {
        assert!((row.gap - (row.estimate.mean - report.v_det)).abs() < 1e-15);
    }
}
