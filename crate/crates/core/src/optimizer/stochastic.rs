//! Projected stochastic gradient ascent on the Monte-Carlo sum rate, used as
//! an independent reference for the deterministic optimizer.

use rayon::prelude::*;
use serde::Serialize;

use super::{project_trace_simplex, InputCovariances};
use crate::channel::{sample_stream, ChannelSampler, FadingKind};
use crate::error::{Error, Result};
use crate::linalg::{diag_block, identity, inv_hpd, logdet_hpd, offsets, CMatrix};
use crate::channel::ChannelModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticOptions {
    pub samples_per_step: usize,
    pub steps: usize,
    pub seed: u64,
    /// Initial step size; the step at iteration `t` is
    /// `step_size / sqrt(1 + t / decay_steps)`.
    pub step_size: f64,
    pub decay_steps: f64,
    /// Iterations per block of the divergence guard.
    pub window: usize,
    /// Relative objective drop between consecutive windows that triggers a
    /// step halving.
    pub drop_tolerance: f64,
    /// Halvings allowed before giving up.
    pub max_halvings: u32,
}

impl Default for StochasticOptions {
    fn default() -> Self {
        StochasticOptions {
            samples_per_step: 64,
            steps: 400,
            seed: 0,
            step_size: 1.0,
            decay_steps: 40.0,
            window: 20,
            drop_tolerance: 0.05,
            max_halvings: 20,
        }
    }
}

struct StepEstimate {
    gradient: Vec<CMatrix>,
    objective: f64,
}

fn estimate(
    sampler: &ChannelSampler<'_>,
    fading: FadingKind,
    sigma2: f64,
    q_full: &CMatrix,
    sizes: &[usize],
    opts: &StochasticOptions,
    step: usize,
) -> Result<StepEstimate> {
    let n_rx = sampler.model().dims().total_rx();
    let offs = offsets(sizes);
    let base = (step * opts.samples_per_step) as u64;
    let draws = (0..opts.samples_per_step)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_stream(opts.seed, base + i as u64);
            let h = sampler.sample(fading, &mut rng)?;
            let m = identity(n_rx).scale(sigma2) + &h * q_full * h.adjoint();
            let objective = logdet_hpd(&m.unscale(sigma2))? / n_rx as f64;
            let g = h.adjoint() * inv_hpd(&m)? * &h;
            let blocks: Vec<CMatrix> = sizes.iter().zip(&offs).map(|(&nk, &o)| diag_block(&g, o, nk)).collect();
            Ok((blocks, objective))
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / (n_rx as f64 * opts.samples_per_step as f64);
    let mut gradient: Vec<CMatrix> = sizes.iter().map(|&nk| CMatrix::zeros(nk, nk)).collect();
    let mut objective = 0.0;
    for (blocks, obj) in &draws {
        for (acc, b) in gradient.iter_mut().zip(blocks) {
            *acc += b;
        }
        objective += obj;
    }
    for g in &mut gradient {
        *g = g.scale(scale);
    }
    Ok(StepEstimate {
        gradient,
        objective: objective / opts.samples_per_step as f64,
    })
}

/// Maximizes `E{(1/N) log det(I + H Q Hᴴ/σ²)}` over per-user trace budgets by
/// projected stochastic gradient ascent from `Q = I`. Returns the final
/// iterate.
pub fn stochastic_reference_optimizer(
    model: &ChannelModel,
    sigma2: f64,
    fading: FadingKind,
    options: &StochasticOptions,
) -> Result<InputCovariances> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if options.samples_per_step == 0 || options.steps == 0 || options.window == 0 {
        return Err(Error::Config("samples_per_step, steps and window must be at least 1".into()));
    }
    if !(options.step_size > 0.0) || !(options.decay_steps > 0.0) {
        return Err(Error::Config("step_size and decay_steps must be positive".into()));
    }
    let sampler = ChannelSampler::new(model);
    let dims = model.dims();
    let sizes = dims.n_per_user().to_vec();
    let mut q: Vec<CMatrix> = sizes.iter().map(|&nk| identity(nk)).collect();

    let mut gain = 1.0;
    let mut halvings = 0;
    let mut window_sum = 0.0;
    let mut window_len = 0;
    let mut prev_window: Option<f64> = None;
    let mut checkpoint = q.clone();

    for t in 0..options.steps {
        let est = estimate(&sampler, fading, sigma2, &crate::linalg::block_diag(&q), &sizes, options, t)?;
        window_sum += est.objective;
        window_len += 1;
        if window_len == options.window {
            let mean = window_sum / window_len as f64;
            window_sum = 0.0;
            window_len = 0;
            match prev_window {
                Some(prev) if mean < prev - options.drop_tolerance * prev.abs() => {
                    halvings += 1;
                    if halvings > options.max_halvings {
                        return Err(Error::Divergence(format!(
                            "step size fell below {:e} after {halvings} halvings",
                            options.step_size * gain
                        )));
                    }
                    gain *= 0.5;
                    q = checkpoint.clone();
                    log::debug!("stochastic ascent: objective dropped {prev} -> {mean}; gain -> {gain}");
                    continue;
                }
                _ => {
                    prev_window = Some(mean);
                    checkpoint = q.clone();
                }
            }
        }
        let eta = gain * options.step_size / (1.0 + t as f64 / options.decay_steps).sqrt();
        for (k, qk) in q.iter_mut().enumerate() {
            let y = &*qk + est.gradient[k].scale(eta);
            *qk = project_trace_simplex(&y, sizes[k] as f64);
        }
    }
    InputCovariances::new(q)
}
