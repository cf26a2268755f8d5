use crate::channel::SystemDims;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, identity, is_hermitian, trace_re, CMatrix, HermitianEigen};

/// Slack allowed on `tr Q_k ≤ n_k`.
pub const TRACE_SLACK: f64 = 1e-9;
/// Most negative eigenvalue accepted in a covariance.
pub const PSD_SLACK: f64 = 1e-10;

/// Per-user input covariances `Q_k` with budgets `tr Q_k ≤ n_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCovariances {
    q: Vec<CMatrix>,
}

impl InputCovariances {
    pub fn new(q: Vec<CMatrix>) -> Result<Self> {
        for (k, qk) in q.iter().enumerate() {
            let n = qk.nrows();
            if !qk.is_square() || n == 0 {
                return Err(Error::Dimension(format!("Q_{} must be square and nonempty", k + 1)));
            }
            let scale = qk.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if !is_hermitian(qk, 1e-10 * scale) {
                return Err(Error::Config(format!("Q_{} is not Hermitian", k + 1)));
            }
            let min = HermitianEigen::new(qk).min();
            if min < -PSD_SLACK {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            if trace_re(qk) > n as f64 + TRACE_SLACK {
                return Err(Error::Config(format!(
                    "tr Q_{} = {} exceeds the budget {n}",
                    k + 1,
                    trace_re(qk)
                )));
            }
        }
        Ok(InputCovariances { q })
    }

    pub fn identity(dims: &SystemDims) -> Self {
        InputCovariances {
            q: dims.n_per_user().iter().map(|&n| identity(n)).collect(),
        }
    }

    pub fn users(&self) -> usize {
        self.q.len()
    }

    pub fn get(&self, k: usize) -> &CMatrix {
        &self.q[k]
    }

    pub fn budget(&self, k: usize) -> f64 {
        self.q[k].nrows() as f64
    }

    pub fn as_slice(&self) -> &[CMatrix] {
        &self.q
    }

    /// Block-diagonal `Q` (`n × n`).
    pub fn full(&self) -> CMatrix {
        block_diag(&self.q)
    }

    /// `Q` with user `k`'s block zeroed.
    pub fn without(&self, k: usize) -> CMatrix {
        let blocks: Vec<CMatrix> = self
            .q
            .iter()
            .enumerate()
            .map(|(j, qj)| if j == k { CMatrix::zeros(qj.nrows(), qj.ncols()) } else { qj.clone() })
            .collect();
        block_diag(&blocks)
    }

    /// Largest per-user Frobenius distance.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| crate::linalg::frobenius(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_parts_unchecked(q: Vec<CMatrix>) -> Self {
        InputCovariances { q }
    }
}
