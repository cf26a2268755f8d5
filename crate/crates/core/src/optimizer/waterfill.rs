//! Single-user water-filling over the eigenmodes of a Hermitian gain matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, identity, CMatrix, HermitianEigen};

/// Gains at or below this are treated as absent.
pub const ZERO_GAIN: f64 = 1e-30;

#[derive(Debug, Clone)]
pub struct WaterfillResult {
    /// `U · diag((1/μ − 1/λ_i)⁺) · Uᴴ`.
    pub q: CMatrix,
    /// Water level multiplier `μ`; zero when the gains vanished.
    pub mu: f64,
    pub active_modes: usize,
    /// Mode powers, aligned with `gains` (descending).
    pub powers: Vec<f64>,
    pub gains: Vec<f64>,
    /// Set when every gain was zero and uniform power was returned instead.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaterLevel {
    /// `1/μ`.
    pub level: f64,
    pub active: usize,
}

/// Water level for descending `gains` and a total `budget`: the largest active
/// set `m` whose closed-form level `(budget + Σ_{i≤m} 1/λ_i)/m` exceeds
/// `1/λ_m`.
pub fn water_level(gains: &[f64], budget: f64) -> Option<WaterLevel> {
    let mut best = None;
    let mut inv_sum = 0.0;
    for (i, &g) in gains.iter().enumerate() {
        if g <= ZERO_GAIN {
            break;
        }
        inv_sum += 1.0 / g;
        let m = i + 1;
        let level = (budget + inv_sum) / m as f64;
        if level > 1.0 / g {
            best = Some(WaterLevel { level, active: m });
        } else {
            break;
        }
    }
    best
}

/// Maximizes `log det(I + P Q)` over `Q ⪰ 0`, `tr Q = budget`.
pub fn waterfill_single(p: &CMatrix, budget: f64) -> Result<WaterfillResult> {
    if !p.is_square() || p.nrows() == 0 {
        return Err(Error::Dimension("gain matrix must be square and nonempty".into()));
    }
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("budget must be positive, got {budget}")));
    }
    let n = p.nrows();
    let eig = HermitianEigen::new(&hermitian_part(p));
    let gains = eig.values.clone();

    let Some(wl) = water_level(&gains, budget) else {
        log::warn!("water-filling on an all-zero gain matrix; returning uniform power");
        return Ok(WaterfillResult {
            q: identity(n).scale(budget / n as f64),
            mu: 0.0,
            active_modes: n,
            powers: vec![budget / n as f64; n],
            gains,
            degenerate: true,
        });
    };
    let powers: Vec<f64> = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| if i < wl.active { (wl.level - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    let q = {
        let mut scaled = eig.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= crate::linalg::c(powers[j]);
        }
        hermitian_part(&(scaled * eig.vectors.adjoint()))
    };
    Ok(WaterfillResult {
        q,
        mu: 1.0 / wl.level,
        active_modes: wl.active,
        powers,
        gains,
        degenerate: false,
    })
}

/// Euclidean projection of a Hermitian matrix onto `{Q ⪰ 0, tr Q = budget}`:
/// eigenvalues are shifted by a common `τ` and clipped at zero.
pub fn project_trace_simplex(y: &CMatrix, budget: f64) -> CMatrix {
    let eig = HermitianEigen::new(&hermitian_part(y));
    let mut tau = eig.values[0] - budget;
    let mut cumulative = 0.0;
    for (i, &v) in eig.values.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - budget) / (i + 1) as f64;
        if v > t {
            tau = t;
        } else {
            break;
        }
    }
    eig.reconstruct_with(|v| (v - tau).max(0.0))
}
