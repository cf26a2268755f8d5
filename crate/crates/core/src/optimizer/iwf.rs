//! Iterative water-filling with a single fixed-point sweep per outer step.

use serde::Serialize;

use super::{effective_channel_from, interference_functional_pk, waterfill_single, InputCovariances};
use crate::channel::{apply_input_covariance, ChannelModel};
use crate::detequiv::{deterministic_sum_rate_from, fixed_point_step, FixedPointState, ResolventMatrices, SolverConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IwfOptions {
    /// Stop once `|V_N(Q^{(t)}) − V_N(Q^{(t−1)})|` falls below this.
    pub stop_threshold: f64,
    pub max_outer: usize,
    /// When set, convergence also requires `max_k ‖Q_k^{(t)} − Q_k^{(t−1)}‖_F`
    /// below this. The rate is flat at the optimum, so a small `|ΔV_N|` alone
    /// leaves `Q` off the optimum by roughly its square root.
    pub q_tolerance: Option<f64>,
    /// Settings of the fully converged solve used to report `V_N`.
    pub solver: SolverConfig,
}

impl Default for IwfOptions {
    fn default() -> Self {
        IwfOptions {
            stop_threshold: 1e-8,
            max_outer: 500,
            q_tolerance: Some(1e-7),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IwfRecord {
    pub iteration: usize,
    /// `V_N(σ², Q^{(t)})` from a converged fixed point.
    pub v: f64,
    /// `max_k ‖Q_k^{(t)} − Q_k^{(t−1)}‖_F`.
    pub max_dq: f64,
    pub e: Vec<f64>,
    pub e_tilde: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminated {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IwfTrace {
    /// `V_N` at the starting point `Q = I`.
    pub v_identity: f64,
    pub records: Vec<IwfRecord>,
    pub terminated: Terminated,
}

impl IwfTrace {
    pub fn final_v(&self) -> f64 {
        self.records.last().map_or(self.v_identity, |r| r.v)
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

#[derive(Debug, Clone)]
pub struct IwfOutcome {
    pub q_star: InputCovariances,
    /// `V_N(σ², Q*)`.
    pub v_star: f64,
    pub trace: IwfTrace,
}

/// Iterative water-filling.
///
/// Starting from `Q = I` and `e = ẽ = 1`, each outer step folds `Q^{(t−1)}`
/// into the model, performs one fixed-point sweep, rebuilds `F` from the base
/// model and water-fills every user against `P_k` computed at `Q^{(t−1)}`.
/// On hitting `max_outer` the best iterate seen is returned.
pub fn iterative_waterfilling(model: &ChannelModel, sigma2: f64, options: &IwfOptions) -> Result<IwfOutcome> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(options.stop_threshold > 0.0) || options.max_outer == 0 {
        return Err(Error::Config("stop_threshold must be > 0 and max_outer >= 1".into()));
    }
    let dims = model.dims();
    let links = dims.sets() * dims.users();
    let solver = options.solver.with_omega(sigma2);

    let mut q = InputCovariances::identity(dims);
    let mut state = FixedPointState::ones(links);

    let start = deterministic_sum_rate_from(&apply_input_covariance(model, &q)?, sigma2, &solver, state.clone())?;
    let v_identity = start.v;
    let mut report_state = start.solution.state;
    let mut v_prev = v_identity;
    let mut best = (v_identity, q.clone());
    let mut records = Vec::new();
    let mut terminated = Terminated::IterationCap;

    for t in 1..=options.max_outer {
        let replaced = apply_input_covariance(model, &q)?;
        let (next, _) = fixed_point_step(&replaced, sigma2, &state)?;
        state = next;
        let phi = ResolventMatrices::compute(&replaced, sigma2, &state)?.phi;
        let f = effective_channel_from(model, &state, &phi);

        let blocks = (0..dims.users())
            .map(|k| {
                let p = interference_functional_pk(&f, &q, k)?;
                Ok(waterfill_single(&p, q.budget(k))?.q)
            })
            .collect::<Result<Vec<_>>>()?;
        let q_next = InputCovariances::from_parts_unchecked(blocks);

        let rate = deterministic_sum_rate_from(
            &apply_input_covariance(model, &q_next)?,
            sigma2,
            &solver,
            report_state.clone(),
        )?;
        report_state = rate.solution.state;
        let v = rate.v;
        if v < v_prev - 1e-12 {
            log::debug!("iterative water-filling: V_N decreased at step {t} ({v_prev} -> {v})");
        }
        records.push(IwfRecord {
            iteration: t,
            v,
            max_dq: q_next.max_distance(&q),
            e: state.e.clone(),
            e_tilde: state.e_tilde.clone(),
        });
        let dq = q_next.max_distance(&q);
        q = q_next;
        if v > best.0 {
            best = (v, q.clone());
        }
        let q_settled = options.q_tolerance.map_or(true, |tol| dq < tol);
        if (v - v_prev).abs() < options.stop_threshold && q_settled {
            terminated = Terminated::Converged;
            break;
        }
        v_prev = v;
    }

    let (v_star, q_star) = match terminated {
        Terminated::Converged if records.last().map_or(true, |r| r.v >= v_identity) => {
            (records.last().map_or(v_identity, |r| r.v), q)
        }
        Terminated::Converged => best,
        Terminated::IterationCap => {
            log::warn!("iterative water-filling hit the cap of {} outer steps", options.max_outer);
            best
        }
    };
    Ok(IwfOutcome {
        q_star,
        v_star,
        trace: IwfTrace {
            v_identity,
            records,
            terminated,
        },
    })
}
