#![allow(dead_code)]

use mimo_deteq::channel::{ChannelModel, SystemDims};
use mimo_deteq::linalg::{identity, trace_re, CMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scalar_model() -> ChannelModel {
    identity_model(1)
}

/// `R = T = I_n`, no line of sight.
pub fn identity_model(n: usize) -> ChannelModel {
    let dims = SystemDims::uniform(1, 1, n).unwrap();
    ChannelModel::from_matrices(dims, vec![vec![(identity(n), identity(n), CMatrix::zeros(n, n))]]).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random Hermitian PSD matrix with trace `trace`.
pub fn random_psd(rng: &mut impl Rng, n: usize, trace: f64) -> CMatrix {
    let a = random_matrix(rng, n, n);
    let m = &a * a.adjoint();
    let t = trace_re(&m);
    m.scale(trace / t)
}

/// Random model with correlated `R`, `T` and, when `los`, a nonzero `H̄`.
pub fn random_model(seed: u64, n_per_set: Vec<usize>, n_per_user: Vec<usize>, los: bool) -> ChannelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = SystemDims::new(n_per_set.clone(), n_per_user.clone()).unwrap();
    let links = n_per_set
        .iter()
        .map(|&nl| {
            n_per_user
                .iter()
                .map(|&nk| {
                    let g = rng.random_range(0.3..1.5);
                    let r = random_psd(&mut rng, nl, g * nl as f64 * 0.5);
                    let t = random_psd(&mut rng, nk, nk as f64);
                    let hbar = if los {
                        random_matrix(&mut rng, nl, nk).scale((0.5 * g / nk as f64).sqrt())
                    } else {
                        CMatrix::zeros(nl, nk)
                    };
                    (r, t, hbar)
                })
                .collect()
        })
        .collect();
    ChannelModel::from_matrices(dims, links).unwrap()
}

/// Shannon transform of the Marchenko–Pastur law for an `N × n` matrix with
/// i.i.d. entries of variance `1/n`, per receive antenna, in nats.
pub fn marchenko_pastur_rate(n_rx: f64, n_tx: f64, sigma2: f64) -> f64 {
    // Written for entries of variance 1/N with load β = n/N, then rescaled.
    let beta = n_tx / n_rx;
    let snr = n_rx / n_tx / sigma2;
    let f = ((snr * (1.0 + beta.sqrt()).powi(2) + 1.0).sqrt() - (snr * (1.0 - beta.sqrt()).powi(2) + 1.0).sqrt()).powi(2);
    beta * (1.0 + snr - f / 4.0).ln() + (1.0 + snr * beta - f / 4.0).ln() - f / (4.0 * snr)
}

/// `e · E₁(1)` from the convergent series `E₁(x) = −γ − ln x − Σ (−x)^k/(k·k!)`.
pub fn e_times_e1_of_one() -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..40 {
        term *= -1.0 / k as f64;
        sum += term / k as f64;
    }
    std::f64::consts::E * (-EULER_GAMMA - sum)
}
