//! Seeded, parallel Monte-Carlo estimates of the ergodic sum rate and of the
//! expected Stieltjes transform of `B_N = H Hᴴ`.
//!
//! Sample `i` draws from its own stream keyed by `(seed, i)` and per-sample
//! values are reduced in index order, so results do not depend on the number
//! of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sample_stream, ChannelModel, ChannelSampler, FadingKind};
use crate::detequiv::{deterministic_sum_rate, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{identity, inv_hpd, logdet_hpd, sqrtm_psd, trace_re, CMatrix};
use crate::optimizer::InputCovariances;

#[derive(Debug, Clone)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub fading: FadingKind,
    /// `σ²` for the sum rate, `ω` for the Stieltjes transform.
    pub point: f64,
    /// Input covariances; identity when absent.
    pub q: Option<InputCovariances>,
    /// Keep the per-sample values in the estimate.
    pub keep_samples: bool,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64, fading: FadingKind, point: f64) -> Self {
        McConfig {
            samples,
            seed,
            fading,
            point,
            q: None,
            keep_samples: false,
        }
    }

    pub fn with_q(mut self, q: InputCovariances) -> Self {
        self.q = Some(q);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if !(self.point > 0.0) || !self.point.is_finite() {
            return Err(Error::Domain(format!("evaluation point must be positive, got {}", self.point)));
        }
        self.fading.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<f64>>,
}

impl McEstimate {
    /// Sequential, index-ordered reduction.
    pub fn from_samples(values: Vec<f64>, seed: u64, keep: bool) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error,
            samples: n,
            seed,
            per_sample: keep.then_some(values),
        }
    }
}

fn run<F>(model: &ChannelModel, config: &McConfig, per_sample: F) -> Result<McEstimate>
where
    F: Fn(&CMatrix) -> Result<f64> + Sync,
{
    config.validate()?;
    let sampler = ChannelSampler::new(model);
    let q_root = match &config.q {
        Some(q) => {
            if q.users() != model.dims().users() {
                return Err(Error::Dimension(format!(
                    "{} covariances for {} users",
                    q.users(),
                    model.dims().users()
                )));
            }
            Some(sqrtm_psd(&q.full()))
        }
        None => None,
    };
    let values = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_stream(config.seed, i as u64);
            let mut h = sampler.sample(config.fading, &mut rng)?;
            if let Some(root) = &q_root {
                h = h * root;
            }
            per_sample(&h)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McEstimate::from_samples(values, config.seed, config.keep_samples))
}

/// `E{(1/N) log det(I_N + H Q Hᴴ/σ²)}` with `σ² = config.point`.
pub fn ergodic_sum_rate_mc(model: &ChannelModel, config: &McConfig) -> Result<McEstimate> {
    let sigma2 = config.point;
    let n = model.dims().total_rx();
    run(model, config, |h| {
        let m = identity(n) + (h * h.adjoint()).unscale(sigma2);
        Ok(logdet_hpd(&m)? / n as f64)
    })
}

/// `E{(1/N) tr (B_N + ωI)⁻¹}` with `ω = config.point`.
pub fn empirical_stieltjes_mc(model: &ChannelModel, config: &McConfig) -> Result<McEstimate> {
    let omega = config.point;
    let n = model.dims().total_rx();
    run(model, config, |h| {
        let m = h * h.adjoint() + identity(n).scale(omega);
        Ok(trace_re(&inv_hpd(&m)?) / n as f64)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FadingRow {
    pub fading: FadingKind,
    pub estimate: McEstimate,
    /// `mean − V_N`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FadingReport {
    pub v_det: f64,
    pub rows: Vec<FadingRow>,
    /// `max − min` of the means.
    pub spread: f64,
    /// Root-mean-square of the per-kind standard errors.
    pub pooled_std_error: f64,
}

/// Runs the sum-rate estimator for each fading kind on a common model and
/// reports how far apart the means are.
pub fn fading_invariance_report(
    model: &ChannelModel,
    sigma2: f64,
    kinds: &[FadingKind],
    samples: usize,
    seed: u64,
) -> Result<FadingReport> {
    if kinds.len() < 2 {
        return Err(Error::Config("need at least two fading kinds".into()));
    }
    let v_det = deterministic_sum_rate(model, sigma2, &SolverConfig::new(sigma2))?.v;
    let rows = kinds
        .iter()
        .map(|&fading| {
            let estimate = ergodic_sum_rate_mc(model, &McConfig::new(samples, seed, fading, sigma2))?;
            Ok(FadingRow {
                fading,
                gap: estimate.mean - v_det,
                estimate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.estimate.mean).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.estimate.mean).fold(f64::INFINITY, f64::min);
    let pooled_std_error =
        (rows.iter().map(|r| r.estimate.std_error.powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    Ok(FadingReport {
        v_det,
        rows,
        spread: max - min,
        pooled_std_error,
    })
}
