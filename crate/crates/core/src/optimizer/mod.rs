//! Capacity-achieving input covariances.
//!
//! With the deterministic equivalent, the sum rate as a function of `Q` reads
//! `V_N(σ², Q) = (1/N) log det(I_n + F Q) + …` where only the first term
//! carries `Q` explicitly and
//!
//! ```text
//! F = blockdiag_k(Σ_l β_{l,k} e_{l,k} T_{l,k}) + H̄ᴴ Φ H̄
//! ```
//!
//! is built from the base `T` and `H̄` with `e`, `Φ` of the `Q`-replaced system.

mod covariance;
mod iwf;
mod stochastic;
mod waterfill;

pub use covariance::{InputCovariances, PSD_SLACK, TRACE_SLACK};
pub use iwf::{iterative_waterfilling, IwfOptions, IwfOutcome, IwfRecord, IwfTrace, Terminated};
pub use stochastic::{stochastic_reference_optimizer, StochasticOptions};
pub use waterfill::{project_trace_simplex, water_level, waterfill_single, WaterLevel, WaterfillResult, ZERO_GAIN};

use serde::Serialize;

use crate::channel::{apply_input_covariance, ChannelModel};
use crate::detequiv::{solve_fixed_point, FixedPointSolution, FixedPointState, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, diag_block, frobenius, hermitian_part, identity, inv_general, CMatrix, HermitianEigen,
};

/// `F` from a solved fixed point of the `Q`-replaced system.
pub fn effective_channel_f(model: &ChannelModel, solution: &FixedPointSolution, sigma2: f64) -> Result<CMatrix> {
    let dims = model.dims();
    let links = dims.sets() * dims.users();
    if solution.state.e.len() != links || solution.matrices.phi.len() != dims.sets() {
        return Err(Error::Dimension("fixed-point solution does not match the model".into()));
    }
    for (l, phi) in solution.matrices.phi.iter().enumerate() {
        if phi.nrows() != dims.n_per_set()[l] {
            return Err(Error::Dimension(format!("Φ_{} has {} rows", l + 1, phi.nrows())));
        }
    }
    if (solution.omega - sigma2).abs() > 1e-12 * sigma2.max(1.0) {
        return Err(Error::Domain(format!(
            "solution was computed at ω={}, not σ²={sigma2}",
            solution.omega
        )));
    }
    Ok(effective_channel_from(model, &solution.state, &solution.matrices.phi))
}

/// `F` from explicit `e` values and `Φ_l` blocks.
pub(crate) fn effective_channel_from(model: &ChannelModel, state: &FixedPointState, phi: &[CMatrix]) -> CMatrix {
    let dims = model.dims();
    let users = dims.users();
    let blocks: Vec<CMatrix> = (0..users)
        .map(|k| {
            let nk = dims.n_per_user()[k];
            let mut acc = CMatrix::zeros(nk, nk);
            for l in 0..dims.sets() {
                acc += model.t(l, k).scale(dims.beta(l, k) * state.e[l * users + k]);
            }
            acc
        })
        .collect();
    let mut f = block_diag(&blocks);
    if model.has_los() {
        let hbar = model.hbar_full();
        f += hbar.adjoint() * block_diag(phi) * &hbar;
    }
    hermitian_part(&f)
}

/// `⟨(I + A B)⁻¹ A⟩_k` for block sizes `sizes`.
pub fn block_resolvent(a: &CMatrix, b: &CMatrix, sizes: &[usize], k: usize) -> Result<CMatrix> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) || sizes.iter().sum::<usize>() != n || k >= sizes.len() {
        return Err(Error::Dimension("block_resolvent: inconsistent shapes".into()));
    }
    let m = identity(n) + a * b;
    let x = inv_general(&m)? * a;
    let off: usize = sizes[..k].iter().sum();
    Ok(diag_block(&x, off, sizes[k]))
}

/// Right-hand side of the block-inverse identity
/// `⟨(I + A B)⁻¹ A⟩_k = (I + C_k B_k)⁻¹ C_k` with `C_k = ⟨(I + A B_{\k})⁻¹ A⟩_k`,
/// for block-diagonal `B`.
pub fn block_resolvent_closed_form(a: &CMatrix, b: &CMatrix, sizes: &[usize], k: usize) -> Result<CMatrix> {
    let off: usize = sizes[..k].iter().sum();
    let bk = diag_block(b, off, sizes[k]);
    let mut b_minus = b.clone();
    b_minus.view_mut((off, off), (sizes[k], sizes[k])).fill(crate::linalg::ZERO);
    let ck = block_resolvent(a, &b_minus, sizes, k)?;
    let m = identity(sizes[k]) + &ck * &bk;
    Ok(inv_general(&m)? * ck)
}

/// `P_k = ⟨(I_n + F Q_{\k})⁻¹ F⟩_k`, symmetrized.
pub fn interference_functional_pk(f: &CMatrix, q: &InputCovariances, k: usize) -> Result<CMatrix> {
    let sizes: Vec<usize> = q.as_slice().iter().map(|m| m.nrows()).collect();
    if k >= sizes.len() {
        return Err(Error::Dimension(format!("user index {} out of range", k + 1)));
    }
    if f.nrows() != sizes.iter().sum::<usize>() || !f.is_square() {
        return Err(Error::Dimension(format!(
            "F is {}×{} but Q spans {}",
            f.nrows(),
            f.ncols(),
            sizes.iter().sum::<usize>()
        )));
    }
    let p = block_resolvent(f, &q.without(k), &sizes, k)?;
    Ok(hermitian_part(&p))
}

/// Eigenvalues of `Q_k` above this count as active modes.
pub const ACTIVE_MODE_TOL: f64 = 1e-9;

/// KKT violations for one user, relative to the water level `μ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserKkt {
    pub mu: f64,
    /// `‖G₊ − μI‖_F / μ` on the active eigenspace.
    pub stationarity: f64,
    /// `‖U₊ᴴ G U₀‖_F / μ`.
    pub cross: f64,
    /// `max(0, λ_max(U₀ᴴ G U₀) − μ) / μ`.
    pub inactive: f64,
    /// `|tr Q_k − n_k| / n_k`.
    pub trace_gap: f64,
}

impl UserKkt {
    pub fn worst(&self) -> f64 {
        self.stationarity.max(self.cross).max(self.inactive).max(self.trace_gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub users: Vec<UserKkt>,
    pub residual: f64,
}

/// KKT residual of `Q` for the deterministic sum-rate problem.
///
/// With `G_k = (1/N)⟨(I + F Q)⁻¹ F⟩_k`, optimality means `G_k = μ_k I` on the
/// range of `Q_k`, `G_k ⪯ μ_k I` on its null space and `tr Q_k = n_k`.
pub fn kkt_residual(model: &ChannelModel, sigma2: f64, q: &InputCovariances) -> Result<f64> {
    Ok(kkt_report(model, sigma2, q, &SolverConfig::new(sigma2))?.residual)
}

pub fn kkt_report(model: &ChannelModel, sigma2: f64, q: &InputCovariances, config: &SolverConfig) -> Result<KktReport> {
    let replaced = apply_input_covariance(model, q)?;
    let solution = solve_fixed_point(&replaced, &config.with_omega(sigma2))?;
    let f = effective_channel_f(model, &solution, sigma2)?;
    kkt_report_from_f(&f, q, model.dims().total_rx())
}

/// KKT residual for a given `F`; `n_rx` is the normalization `N`.
pub fn kkt_report_from_f(f: &CMatrix, q: &InputCovariances, n_rx: usize) -> Result<KktReport> {
    let sizes: Vec<usize> = q.as_slice().iter().map(|m| m.nrows()).collect();
    let full_q = q.full();
    let g_full = inv_general(&(identity(f.nrows()) + f * &full_q))? * f;
    let offs = crate::linalg::offsets(&sizes);
    let mut users = Vec::with_capacity(sizes.len());
    for (k, &nk) in sizes.iter().enumerate() {
        let g = hermitian_part(&diag_block(&g_full, offs[k], nk).unscale(n_rx as f64));
        let eig = HermitianEigen::new(q.get(k));
        let active: Vec<usize> = (0..nk).filter(|&i| eig.values[i] > ACTIVE_MODE_TOL).collect();
        let inactive: Vec<usize> = (0..nk).filter(|&i| eig.values[i] <= ACTIVE_MODE_TOL).collect();
        let trace_gap = (crate::linalg::trace_re(q.get(k)) - nk as f64).abs() / nk as f64;
        if active.is_empty() {
            users.push(UserKkt {
                mu: 0.0,
                stationarity: f64::INFINITY,
                cross: 0.0,
                inactive: 0.0,
                trace_gap,
            });
            continue;
        }
        let u_plus = eig.vectors.select_columns(&active);
        let g_pp = u_plus.adjoint() * &g * &u_plus;
        let mu = (0..active.len()).map(|i| g_pp[(i, i)].re).sum::<f64>() / active.len() as f64;
        if !(mu > 0.0) {
            return Err(Error::Conditioning(format!("nonpositive water level {mu} for user {}", k + 1)));
        }
        let stationarity = frobenius(&(&g_pp - identity(active.len()).scale(mu))) / mu;
        let (cross, inactive_violation) = if inactive.is_empty() {
            (0.0, 0.0)
        } else {
            let u_zero = eig.vectors.select_columns(&inactive);
            let cross = frobenius(&(u_plus.adjoint() * &g * &u_zero)) / mu;
            let g00 = hermitian_part(&(u_zero.adjoint() * &g * &u_zero));
            let top = HermitianEigen::new(&g00).max();
            (cross, (top - mu).max(0.0) / mu)
        };
        users.push(UserKkt {
            mu,
            stationarity,
            cross,
            inactive: inactive_violation,
            trace_gap,
        });
    }
    let residual = users.iter().map(UserKkt::worst).fold(0.0, f64::max);
    Ok(KktReport { users, residual })
}
