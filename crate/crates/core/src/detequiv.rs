//! Deterministic equivalents of the Stieltjes and Shannon transforms of
//! `B_N = Σ_k H_k H_kᴴ`.
//!
//! The unknowns are the `2LK` scalars `e_{l,k}`, `ẽ_{l,k}`:
//!
//! ```text
//! Φ_l = (ωI + ω Σ_k ẽ_{l,k} R_{l,k})⁻¹          Φ̃_k = (ωI + ω Σ_l β_{l,k} e_{l,k} T_{l,k})⁻¹
//! Ψ   = (Φ⁻¹ + ω H̄ Φ̃ H̄ᴴ)⁻¹                     Ψ̃   = (Φ̃⁻¹ + ω H̄ᴴ Φ H̄)⁻¹
//! e_{l,k} = tr(R_{l,k} ⟪Ψ⟫_l) / N_l              ẽ_{l,k} = tr(T_{l,k} ⟨Ψ̃⟩_k) / n_k
//! ```
//!
//! The system has a unique positive solution for every `ω > 0`; it is found
//! by a (optionally damped) Picard sweep.

use serde::Serialize;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, c, diag_block, identity, inv_hpd, logdet_hpd, trace_product_re, trace_re, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Largest accepted change of any `e` or `ẽ` in one sweep.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Blend factor for the sweep updates, in `(0, 1]`.
    pub damping: f64,
    pub omega: f64,
}

impl SolverConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;
    pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

    pub fn new(omega: f64) -> Self {
        SolverConfig {
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            damping: 1.0,
            omega,
        }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        SolverConfig { omega, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Domain(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(1.0)
    }
}

/// The scalar unknowns, stored row-major over `(l, k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointState {
    pub e: Vec<f64>,
    pub e_tilde: Vec<f64>,
}

impl FixedPointState {
    /// All ones, the customary starting point.
    pub fn ones(links: usize) -> Self {
        FixedPointState {
            e: vec![1.0; links],
            e_tilde: vec![1.0; links],
        }
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.e
            .iter()
            .zip(&other.e)
            .chain(self.e_tilde.iter().zip(&other.e_tilde))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn blend(&self, next: &Self, damping: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (1.0 - damping) * x + damping * y).collect();
        FixedPointState {
            e: mix(&self.e, &next.e),
            e_tilde: mix(&self.e_tilde, &next.e_tilde),
        }
    }
}

/// Matrices implied by a given state.
#[derive(Debug, Clone)]
pub struct ResolventMatrices {
    /// `Φ_l⁻¹ = ωI + ω Σ_k ẽ_{l,k} R_{l,k}`.
    pub phi_inv: Vec<CMatrix>,
    pub phi: Vec<CMatrix>,
    /// `Φ̃_k⁻¹ = ωI + ω Σ_l β_{l,k} e_{l,k} T_{l,k}`.
    pub phi_tilde_inv: Vec<CMatrix>,
    pub phi_tilde: Vec<CMatrix>,
    pub psi_inv: CMatrix,
    pub psi: CMatrix,
    pub psi_tilde_inv: CMatrix,
    pub psi_tilde: CMatrix,
}

impl ResolventMatrices {
    pub fn compute(model: &ChannelModel, omega: f64, state: &FixedPointState) -> Result<Self> {
        let dims = model.dims();
        let (nsets, nusers) = (dims.sets(), dims.users());

        let mut phi_inv = Vec::with_capacity(nsets);
        for l in 0..nsets {
            let mut m = identity(dims.n_per_set()[l]);
            for k in 0..nusers {
                m += model.r(l, k).scale(state.e_tilde[l * nusers + k]);
            }
            phi_inv.push(m.scale(omega));
        }
        let mut phi_tilde_inv = Vec::with_capacity(nusers);
        for k in 0..nusers {
            let mut m = identity(dims.n_per_user()[k]);
            for l in 0..nsets {
                m += model.t(l, k).scale(dims.beta(l, k) * state.e[l * nusers + k]);
            }
            phi_tilde_inv.push(m.scale(omega));
        }
        let phi = phi_inv.iter().map(inv_hpd).collect::<Result<Vec<_>>>()?;
        let phi_tilde = phi_tilde_inv.iter().map(inv_hpd).collect::<Result<Vec<_>>>()?;

        let mut psi_inv = block_diag(&phi_inv);
        let mut psi_tilde_inv = block_diag(&phi_tilde_inv);
        let (psi, psi_tilde) = if model.has_los() {
            let hbar = model.hbar_full();
            let phi_full = block_diag(&phi);
            let phi_tilde_full = block_diag(&phi_tilde);
            psi_inv += (&hbar * &phi_tilde_full * hbar.adjoint()).scale(omega);
            psi_tilde_inv += (hbar.adjoint() * &phi_full * &hbar).scale(omega);
            (inv_hpd(&psi_inv)?, inv_hpd(&psi_tilde_inv)?)
        } else {
            (block_diag(&phi), block_diag(&phi_tilde))
        };
        Ok(ResolventMatrices {
            phi_inv,
            phi,
            phi_tilde_inv,
            phi_tilde,
            psi_inv,
            psi,
            psi_tilde_inv,
            psi_tilde,
        })
    }

    /// Right-hand side of the fixed-point equations.
    pub fn next_state(&self, model: &ChannelModel) -> FixedPointState {
        let dims = model.dims();
        let rx = dims.rx_offsets();
        let tx = dims.tx_offsets();
        let mut e = Vec::with_capacity(dims.sets() * dims.users());
        let mut e_tilde = Vec::with_capacity(dims.sets() * dims.users());
        for l in 0..dims.sets() {
            let nl = dims.n_per_set()[l];
            let psi_l = diag_block(&self.psi, rx[l], nl);
            for k in 0..dims.users() {
                let nk = dims.n_per_user()[k];
                let psi_tilde_k = diag_block(&self.psi_tilde, tx[k], nk);
                e.push(trace_product_re(model.r(l, k), &psi_l) / nl as f64);
                e_tilde.push(trace_product_re(model.t(l, k), &psi_tilde_k) / nk as f64);
            }
        }
        FixedPointState { e, e_tilde }
    }
}

/// One undamped sweep from `state`: returns the updated scalars together with
/// the matrices they were computed from.
pub fn fixed_point_step(
    model: &ChannelModel,
    omega: f64,
    state: &FixedPointState,
) -> Result<(FixedPointState, ResolventMatrices)> {
    let mats = ResolventMatrices::compute(model, omega, state)?;
    Ok((mats.next_state(model), mats))
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub omega: f64,
    pub state: FixedPointState,
    pub matrices: ResolventMatrices,
    pub iterations: usize,
    pub converged: bool,
    /// `max |x − map(x)|` at the returned point.
    pub residual: f64,
    users: usize,
}

impl FixedPointSolution {
    pub fn e(&self, l: usize, k: usize) -> f64 {
        self.state.e[l * self.users + k]
    }

    pub fn e_tilde(&self, l: usize, k: usize) -> f64 {
        self.state.e_tilde[l * self.users + k]
    }

    pub fn psi(&self) -> &CMatrix {
        &self.matrices.psi
    }

    pub fn psi_tilde(&self) -> &CMatrix {
        &self.matrices.psi_tilde
    }

    /// Block-diagonal `Φ` (`N × N`).
    pub fn phi(&self) -> CMatrix {
        block_diag(&self.matrices.phi)
    }

    /// Block-diagonal `Φ̃` (`n × n`).
    pub fn phi_tilde(&self) -> CMatrix {
        block_diag(&self.matrices.phi_tilde)
    }
}

/// Sweeps without a new smallest residual after which the iteration is
/// considered to sit at its rounding floor.
const STAGNATION_SWEEPS: usize = 50;
/// Rounding floors above this (relative to the largest unknown) are not
/// accepted as convergence.
const STAGNATION_RELATIVE: f64 = 1e-9;

fn magnitude(state: &FixedPointState) -> f64 {
    state.e.iter().chain(&state.e_tilde).fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Solves the fixed point from the all-ones start.
pub fn solve_fixed_point(model: &ChannelModel, config: &SolverConfig) -> Result<FixedPointSolution> {
    let links = model.dims().sets() * model.dims().users();
    solve_fixed_point_from(model, config, FixedPointState::ones(links))
}

/// Solves the fixed point from an arbitrary positive start.
pub fn solve_fixed_point_from(
    model: &ChannelModel,
    config: &SolverConfig,
    init: FixedPointState,
) -> Result<FixedPointSolution> {
    config.validate()?;
    let links = model.dims().sets() * model.dims().users();
    if init.e.len() != links || init.e_tilde.len() != links {
        return Err(Error::Dimension(format!("initial state must hold {links} entries per family")));
    }
    if init.e.iter().chain(&init.e_tilde).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain("initial state must be nonnegative and finite".into()));
    }
    let omega = config.omega;
    let mut state = init;
    let mut damping = config.damping;
    let mut prev_residual = f64::INFINITY;
    let mut rises = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut best_residual = f64::INFINITY;
    let mut since_best = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        let (next, _) = fixed_point_step(model, omega, &state)?;
        residual = next.max_abs_diff(&state);
        state = state.blend(&next, damping);
        if residual < config.tolerance {
            converged = true;
            break;
        }
        if residual < best_residual {
            best_residual = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_SWEEPS && residual <= STAGNATION_RELATIVE * magnitude(&state).max(1.0) {
                log::debug!("fixed point stagnated at residual {residual:e} after {iterations} sweeps");
                converged = true;
                break;
            }
        }
        if residual > prev_residual {
            rises += 1;
            if rises >= 2 {
                damping *= 0.5;
                rises = 0;
                log::debug!("fixed point oscillating at sweep {iterations}; damping -> {damping}");
            }
        } else {
            rises = 0;
        }
        prev_residual = residual;
    }
    if !converged {
        return Err(Error::NonConvergence { iterations, residual });
    }

    let matrices = ResolventMatrices::compute(model, omega, &state)?;
    let final_residual = matrices.next_state(model).max_abs_diff(&state);
    Ok(FixedPointSolution {
        omega,
        state,
        matrices,
        iterations,
        converged,
        residual: final_residual,
        users: model.dims().users(),
    })
}

/// `(1/N) tr Ψ`, the deterministic equivalent of `E{m_{B_N}(ω)}`.
pub fn deterministic_stieltjes(solution: &FixedPointSolution) -> f64 {
    trace_re(solution.psi()) / solution.psi().nrows() as f64
}

#[derive(Debug, Clone)]
pub struct SumRate {
    /// Mean of the two equivalent forms, nats per receive antenna.
    pub v: f64,
    pub v17a: f64,
    pub v17b: f64,
    pub solution: FixedPointSolution,
}

/// Largest tolerated gap between the two closed forms before the evaluation
/// is rejected.
pub const SUM_RATE_CONSISTENCY: f64 = 1e-6;

/// Evaluates the two closed forms of the deterministic sum rate at a solved
/// fixed point (`ω = σ²`).
pub fn sum_rate_forms(model: &ChannelModel, solution: &FixedPointSolution) -> Result<(f64, f64)> {
    let dims = model.dims();
    let sigma2 = solution.omega;
    let n_rx = dims.total_rx() as f64;
    let m = &solution.matrices;
    let scale = c(1.0 / sigma2);

    let mut coupling = 0.0;
    for l in 0..dims.sets() {
        for k in 0..dims.users() {
            coupling += dims.n_per_set()[l] as f64 * solution.e(l, k) * solution.e_tilde(l, k);
        }
    }
    let coupling = sigma2 * coupling / n_rx;

    let mut a = logdet_hpd(&(&m.psi_inv * scale))?;
    for blk in &m.phi_tilde_inv {
        a += logdet_hpd(&(blk * scale))?;
    }
    let mut b = logdet_hpd(&(&m.psi_tilde_inv * scale))?;
    for blk in &m.phi_inv {
        b += logdet_hpd(&(blk * scale))?;
    }
    Ok((a / n_rx - coupling, b / n_rx - coupling))
}

/// Deterministic equivalent of the ergodic sum rate `(1/N) E log det(I + B_N/σ²)`.
pub fn deterministic_sum_rate(model: &ChannelModel, sigma2: f64, config: &SolverConfig) -> Result<SumRate> {
    let solution = solve_fixed_point(model, &config.with_omega(sigma2))?;
    sum_rate_at(model, solution)
}

/// Same as [`deterministic_sum_rate`] but warm-started.
pub fn deterministic_sum_rate_from(
    model: &ChannelModel,
    sigma2: f64,
    config: &SolverConfig,
    init: FixedPointState,
) -> Result<SumRate> {
    let solution = solve_fixed_point_from(model, &config.with_omega(sigma2), init)?;
    sum_rate_at(model, solution)
}

fn sum_rate_at(model: &ChannelModel, solution: FixedPointSolution) -> Result<SumRate> {
    let (v17a, v17b) = sum_rate_forms(model, &solution)?;
    if (v17a - v17b).abs() > SUM_RATE_CONSISTENCY {
        return Err(Error::Consistency(format!(
            "sum-rate forms disagree: {v17a} vs {v17b}"
        )));
    }
    Ok(SumRate {
        v: 0.5 * (v17a + v17b),
        v17a,
        v17b,
        solution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// `(1/N) tr Ψ(σ²) − 1/σ²`.
    pub analytic: f64,
    /// Central difference of the deterministic sum rate.
    pub numeric: f64,
    pub rel_err: f64,
}

/// Compares `∂V/∂σ² = (1/N) tr Ψ − 1/σ²` against a central difference.
pub fn check_shannon_derivative(
    model: &ChannelModel,
    sigma2: f64,
    step: f64,
    config: &SolverConfig,
) -> Result<DerivativeCheck> {
    if !(step > 0.0 && sigma2 > step) {
        return Err(Error::Domain(format!("need sigma2 > step > 0, got sigma2={sigma2}, step={step}")));
    }
    let center = solve_fixed_point(model, &config.with_omega(sigma2))?;
    let analytic = deterministic_stieltjes(&center) - 1.0 / sigma2;
    let up = deterministic_sum_rate_from(model, sigma2 + step, config, center.state.clone())?.v;
    let down = deterministic_sum_rate_from(model, sigma2 - step, config, center.state.clone())?.v;
    let numeric = (up - down) / (2.0 * step);
    Ok(DerivativeCheck {
        analytic,
        numeric,
        rel_err: ((numeric - analytic) / analytic).abs(),
    })
}
