//! Two-sided correlated Rician channel model.
//!
//! Each link `(l, k)` from user `k` to antenna set `l` is
//! `H_{l,k} = R^{1/2} X T^{1/2} + H̄` with `X` having i.i.d. entries of variance
//! `1/n_k`. The model stores the materialized `R`, `T` and `H̄` for every link;
//! every solver and estimator reads from it.

mod correlation;
mod fading;
mod sample;

pub use correlation::{
    build_correlation_matrix, build_los_matrix, steering_vector, DEFAULT_QUADRATURE_POINTS,
    MIN_QUADRATURE_POINTS, PSD_FLOOR,
};
pub use fading::FadingKind;
pub use sample::{sample_channel, sample_stream, ChannelSampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, is_hermitian, offsets, repair_psd, spectral_norm_herm, sqrtm_psd, trace_re, CMatrix,
};
use crate::optimizer::InputCovariances;

/// Antenna counts of the antenna sets (`N_l`) and the users (`n_k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    n_per_set: Vec<usize>,
    n_per_user: Vec<usize>,
}

impl SystemDims {
    pub fn new(n_per_set: Vec<usize>, n_per_user: Vec<usize>) -> Result<Self> {
        if n_per_set.is_empty() || n_per_user.is_empty() {
            return Err(Error::Config("need at least one antenna set and one user".into()));
        }
        if n_per_set.iter().chain(&n_per_user).any(|&n| n == 0) {
            return Err(Error::Config("every antenna count must be at least 1".into()));
        }
        Ok(SystemDims { n_per_set, n_per_user })
    }

    /// Same antenna count everywhere.
    pub fn uniform(sets: usize, users: usize, antennas: usize) -> Result<Self> {
        Self::new(vec![antennas; sets], vec![antennas; users])
    }

    /// Number of antenna sets `L`.
    pub fn sets(&self) -> usize {
        self.n_per_set.len()
    }

    /// Number of users `K`.
    pub fn users(&self) -> usize {
        self.n_per_user.len()
    }

    pub fn n_per_set(&self) -> &[usize] {
        &self.n_per_set
    }

    pub fn n_per_user(&self) -> &[usize] {
        &self.n_per_user
    }

    /// Total receive antennas `N`.
    pub fn total_rx(&self) -> usize {
        self.n_per_set.iter().sum()
    }

    /// Total transmit antennas `n`.
    pub fn total_tx(&self) -> usize {
        self.n_per_user.iter().sum()
    }

    /// `β_{l,k} = N_l / n_k`.
    pub fn beta(&self, l: usize, k: usize) -> f64 {
        self.n_per_set[l] as f64 / self.n_per_user[k] as f64
    }

    pub fn rx_offsets(&self) -> Vec<usize> {
        offsets(&self.n_per_set)
    }

    pub fn tx_offsets(&self) -> Vec<usize> {
        offsets(&self.n_per_user)
    }

    fn index(&self, l: usize, k: usize) -> usize {
        l * self.users() + k
    }
}

/// Geometry and power parameters of one link. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub theta_r: f64,
    pub theta_t: f64,
    pub delta_r: f64,
    pub delta_t: f64,
    pub theta_bar_r: f64,
    pub theta_bar_t: f64,
    pub kappa: f64,
    pub g: f64,
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::Config(format!("g must be > 0, got {}", self.g)));
        }
        if !(self.delta_r > 0.0) || !(self.delta_t > 0.0) {
            return Err(Error::Config(format!(
                "angular spreads must be > 0, got delta_r={} delta_t={}",
                self.delta_r, self.delta_t
            )));
        }
        Ok(())
    }
}

/// Materialized matrices of one link.
#[derive(Debug, Clone)]
pub struct Link {
    /// `N_l × N_l` receive correlation.
    pub r: CMatrix,
    /// `n_k × n_k` transmit correlation.
    pub t: CMatrix,
    /// `N_l × n_k` line-of-sight component.
    pub hbar: CMatrix,
    pub kappa: f64,
    pub g: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelModel {
    dims: SystemDims,
    links: Vec<Link>,
}

impl ChannelModel {
    /// Builds a model from explicit per-link matrices (`links[l][k]`).
    ///
    /// Shapes, Hermitian symmetry and positive semidefiniteness are checked;
    /// trace normalization is not imposed. `kappa` and `g` are inferred from
    /// the traces.
    pub fn from_matrices(dims: SystemDims, links: Vec<Vec<(CMatrix, CMatrix, CMatrix)>>) -> Result<Self> {
        if links.len() != dims.sets() || links.iter().any(|row| row.len() != dims.users()) {
            return Err(Error::Dimension(format!(
                "expected a {}x{} grid of links",
                dims.sets(),
                dims.users()
            )));
        }
        let mut out = Vec::with_capacity(dims.sets() * dims.users());
        for (l, row) in links.into_iter().enumerate() {
            for (k, (r, t, hbar)) in row.into_iter().enumerate() {
                let nl = dims.n_per_set[l];
                let nk = dims.n_per_user[k];
                let shape_ok = r.shape() == (nl, nl) && t.shape() == (nk, nk) && hbar.shape() == (nl, nk);
                if !shape_ok {
                    return Err(Error::Dimension("link matrix shapes do not match the dimensions".into())
                        .at_link(l, k));
                }
                for m in [&r, &t] {
                    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
                    if !is_hermitian(m, 1e-10 * scale) {
                        return Err(Error::Config("correlation matrix is not Hermitian".into()).at_link(l, k));
                    }
                }
                let r = repair_psd(&r, PSD_FLOOR).map_err(|e| e.at_link(l, k))?;
                let t = repair_psd(&t, PSD_FLOOR).map_err(|e| e.at_link(l, k))?;
                let scattered = trace_re(&r) * trace_re(&t) / nk as f64;
                let los = frobenius(&hbar).powi(2);
                let kappa = if scattered > 0.0 { los / scattered } else if los > 0.0 { f64::INFINITY } else { 0.0 };
                let g = (scattered + los) / nl as f64;
                out.push(Link { r, t, hbar, kappa, g });
            }
        }
        Ok(ChannelModel { dims, links: out })
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn link(&self, l: usize, k: usize) -> &Link {
        &self.links[self.dims.index(l, k)]
    }

    pub fn r(&self, l: usize, k: usize) -> &CMatrix {
        &self.link(l, k).r
    }

    pub fn t(&self, l: usize, k: usize) -> &CMatrix {
        &self.link(l, k).t
    }

    pub fn hbar(&self, l: usize, k: usize) -> &CMatrix {
        &self.link(l, k).hbar
    }

    /// Stacked `N × n` line-of-sight matrix.
    pub fn hbar_full(&self) -> CMatrix {
        let rx = self.dims.rx_offsets();
        let tx = self.dims.tx_offsets();
        let mut out = CMatrix::zeros(self.dims.total_rx(), self.dims.total_tx());
        for l in 0..self.dims.sets() {
            for k in 0..self.dims.users() {
                let h = self.hbar(l, k);
                out.view_mut((rx[l], tx[k]), h.shape()).copy_from(h);
            }
        }
        out
    }

    pub fn has_los(&self) -> bool {
        self.links.iter().any(|lk| lk.hbar.iter().any(|z| z.norm() > 0.0))
    }
}

/// Builds and normalizes the model for an `L × K` grid of link specs
/// (`specs[l][k]`).
///
/// After normalization `tr R = g N_l/(κ+1)`, `tr T = n_k` and
/// `tr H̄H̄ᴴ = κ g N_l/(κ+1)`; `H̄ = 0` when `κ = 0`.
pub fn assemble_model(dims: &SystemDims, specs: &[Vec<LinkSpec>], quadrature_points: usize) -> Result<ChannelModel> {
    if specs.len() != dims.sets() || specs.iter().any(|row| row.len() != dims.users()) {
        return Err(Error::Config(format!(
            "link grid must be {}x{} (sets x users)",
            dims.sets(),
            dims.users()
        )));
    }
    let mut links = Vec::with_capacity(dims.sets() * dims.users());
    for (l, row) in specs.iter().enumerate() {
        for (k, spec) in row.iter().enumerate() {
            links.push(assemble_link(dims, l, k, spec, quadrature_points).map_err(|e| e.at_link(l, k))?);
        }
    }
    Ok(ChannelModel { dims: dims.clone(), links })
}

fn assemble_link(dims: &SystemDims, l: usize, k: usize, spec: &LinkSpec, quadrature_points: usize) -> Result<Link> {
    spec.validate()?;
    let nl = dims.n_per_set[l];
    let nk = dims.n_per_user[k];
    let kappa = spec.kappa;
    let g = spec.g;

    let r_raw = build_correlation_matrix(spec.theta_r, spec.delta_r, nl, quadrature_points)?;
    let t_raw = build_correlation_matrix(spec.theta_t, spec.delta_t, nk, quadrature_points)?;
    let tr_r = trace_re(&r_raw);
    let tr_t = trace_re(&t_raw);
    if !(tr_r > 0.0) || !(tr_t > 0.0) {
        return Err(Error::Config(
            "correlation trace vanished (mean angle outside the integration range?)".into(),
        ));
    }
    let r = r_raw.scale(g * nl as f64 / (kappa + 1.0) / tr_r);
    let t = t_raw.scale(nk as f64 / tr_t);

    let hbar = if kappa > 0.0 {
        let raw = build_los_matrix(spec.theta_bar_r, spec.theta_bar_t, nl, nk);
        let target = kappa * g * nl as f64 / (kappa + 1.0);
        let scale = (target / frobenius(&raw).powi(2)).sqrt();
        raw.scale(scale)
    } else {
        CMatrix::zeros(nl, nk)
    };
    Ok(Link { r, t, hbar, kappa, g })
}

/// Spectral norms of one link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkNorms {
    pub l: usize,
    pub k: usize,
    pub r: f64,
    pub t: f64,
    pub hbar_gram: f64,
}

impl LinkNorms {
    pub fn max(&self) -> f64 {
        self.r.max(self.t).max(self.hbar_gram)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub max_norm: f64,
    pub c_max: f64,
    pub links: Vec<LinkNorms>,
    /// 1-based `(l, k)` of links whose largest norm exceeds `c_max`.
    pub exceeding: Vec<(usize, usize)>,
}

/// Reports the spectral norms of `R`, `T` and `H̄H̄ᴴ` for every link and flags
/// those above `c_max`.
pub fn validate_assumptions(model: &ChannelModel, c_max: f64) -> AssumptionReport {
    let dims = model.dims();
    let mut links = Vec::new();
    for l in 0..dims.sets() {
        for k in 0..dims.users() {
            let link = model.link(l, k);
            let gram = &link.hbar * link.hbar.adjoint();
            links.push(LinkNorms {
                l: l + 1,
                k: k + 1,
                r: spectral_norm_herm(&link.r),
                t: spectral_norm_herm(&link.t),
                hbar_gram: spectral_norm_herm(&gram),
            });
        }
    }
    let max_norm = links.iter().map(LinkNorms::max).fold(0.0, f64::max);
    let exceeding = links.iter().filter(|n| n.max() > c_max).map(|n| (n.l, n.k)).collect();
    AssumptionReport {
        max_norm,
        c_max,
        links,
        exceeding,
    }
}

/// Folds the input covariances into the model: `T := Q^{1/2} T Q^{1/2}` and
/// `H̄ := H̄ Q^{1/2}` for every link of user `k`. `R` is untouched and the trace
/// normalization is deliberately not re-imposed.
pub fn apply_input_covariance(model: &ChannelModel, q: &InputCovariances) -> Result<ChannelModel> {
    let dims = model.dims();
    if q.users() != dims.users() {
        return Err(Error::Dimension(format!(
            "{} covariances for {} users",
            q.users(),
            dims.users()
        )));
    }
    let roots: Vec<CMatrix> = (0..dims.users())
        .map(|k| {
            let qk = q.get(k);
            if qk.shape() != (dims.n_per_user[k], dims.n_per_user[k]) {
                return Err(Error::Dimension(format!("Q_{} has shape {:?}", k + 1, qk.shape())));
            }
            Ok(sqrtm_psd(qk))
        })
        .collect::<Result<_>>()?;
    let mut links = model.links.clone();
    for l in 0..dims.sets() {
        for k in 0..dims.users() {
            let link = &mut links[dims.index(l, k)];
            let root = &roots[k];
            link.t = crate::linalg::hermitian_part(&(root * &link.t * root));
            link.hbar = &link.hbar * root;
        }
    }
    Ok(ChannelModel { dims: dims.clone(), links })
}
