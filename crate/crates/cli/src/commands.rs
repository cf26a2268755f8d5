use std::path::{Path, PathBuf};
use std::time::Instant;

use mimo_deteq::channel::{apply_input_covariance, ChannelModel, FadingKind};
use mimo_deteq::detequiv::{deterministic_stieltjes, deterministic_sum_rate, solve_fixed_point};
use mimo_deteq::linalg::{CMatrix, HermitianEigen};
use mimo_deteq::montecarlo::{ergodic_sum_rate_mc, McConfig};
use mimo_deteq::optimizer::{iterative_waterfilling, kkt_report, InputCovariances, IwfOptions};
use mimo_deteq::scenario::ScenarioConfig;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{write_atomic, SweepRow, CSV_HEADER};

fn load(path: &Path) -> Result<(ScenarioConfig, ChannelModel), CliError> {
    let cfg = ScenarioConfig::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let model = cfg.build()?;
    Ok((cfg, model))
}

pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn parse_snr_list(text: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("invalid SNR value {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("SNR list is empty".into()));
    }
    Ok(values)
}

pub fn solve(config: &Path, omega: f64) -> Result<(), CliError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(CliError::Usage(format!("omega must be a positive number, got {omega}")));
    }
    let (cfg, model) = load(config)?;
    let sol = solve_fixed_point(&model, &cfg.solver_config(omega))?;
    let dims = model.dims();
    println!("omega = {omega}");
    println!("link      e             e_tilde");
    for l in 0..dims.sets() {
        for k in 0..dims.users() {
            println!("({},{})     e = {:.6}  e_tilde = {:.6}", l + 1, k + 1, sol.e(l, k), sol.e_tilde(l, k));
        }
    }
    println!("stieltjes (1/N) tr Psi = {:.10}", deterministic_stieltjes(&sol));
    println!("iterations = {}", sol.iterations);
    println!("residual = {:e}", sol.residual);
    Ok(())
}

pub struct SweepArgs {
    pub config: PathBuf,
    pub snr_db: Vec<f64>,
    pub fading: FadingKind,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub timing: bool,
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    args.fading.validate()?;
    let (cfg, model) = load(&args.config)?;
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for &snr_db in &args.snr_db {
        let start = Instant::now();
        let sigma2 = sigma2_from_snr_db(snr_db);
        let rate = deterministic_sum_rate(&model, sigma2, &cfg.solver_config(sigma2))?;
        let mc = if args.samples > 0 {
            let est = ergodic_sum_rate_mc(&model, &McConfig::new(args.samples, args.seed, args.fading, sigma2))?;
            Some((est.mean, est.std_error))
        } else {
            None
        };
        let row = SweepRow {
            snr_db,
            sigma2,
            v_det: rate.v,
            v17a: rate.v17a,
            v17b: rate.v17b,
            mc,
            fading: args.fading.to_string(),
            samples: args.samples,
            fp_iterations: rate.solution.iterations,
            wall_ms: if args.timing { start.elapsed().as_millis() } else { 0 },
        };
        log::info!("snr {snr_db} dB: v_det {} mc {:?}", rate.v, mc);
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    write_atomic(&args.out, text.as_bytes())
}

pub struct OptimizeArgs {
    pub config: PathBuf,
    pub snr_db: f64,
    pub out: PathBuf,
    pub mc: Option<(FadingKind, usize, u64)>,
}

#[derive(Serialize)]
struct CovarianceReport {
    user: usize,
    real: Vec<Vec<f64>>,
    imag: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    water_level: f64,
    /// `Σ_i (1 − |u_iᴴ v_i|)` between the eigenvectors of `Q_k` and of
    /// `Σ_l T_{l,k}`, reported when the model has no line of sight.
    #[serde(skip_serializing_if = "Option::is_none")]
    transmit_alignment: Option<f64>,
}

#[derive(Serialize)]
struct TraceEntry {
    iteration: usize,
    v: f64,
    max_dq: f64,
}

#[derive(Serialize)]
struct McReport {
    fading: String,
    samples: usize,
    seed: u64,
    identity_mean: f64,
    identity_std_error: f64,
    optimized_mean: f64,
    optimized_std_error: f64,
}

#[derive(Serialize)]
struct OptimizeReport {
    snr_db: f64,
    sigma2: f64,
    v_identity: f64,
    v_optimized: f64,
    kkt_residual: f64,
    terminated_reason: mimo_deteq::optimizer::Terminated,
    iterations: usize,
    covariances: Vec<CovarianceReport>,
    trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<McReport>,
}

fn rows(m: &CMatrix, f: impl Fn(num_complex::Complex64) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(m[(i, j)])).collect()).collect()
}

fn alignment(q: &CMatrix, t: &CMatrix) -> f64 {
    let eq = HermitianEigen::new(q);
    let et = HermitianEigen::new(t);
    (0..q.nrows())
        .map(|i| 1.0 - eq.vectors.column(i).dotc(&et.vectors.column(i)).norm())
        .sum()
}

pub fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    if !args.snr_db.is_finite() {
        return Err(CliError::Usage(format!("invalid SNR {}", args.snr_db)));
    }
    let (cfg, model) = load(&args.config)?;
    let sigma2 = sigma2_from_snr_db(args.snr_db);
    let options = IwfOptions {
        solver: cfg.solver_config(sigma2),
        ..IwfOptions::default()
    };
    let outcome = iterative_waterfilling(&model, sigma2, &options)?;
    let kkt = kkt_report(&model, sigma2, &outcome.q_star, &cfg.solver_config(sigma2))?;
    let dims = model.dims();

    let covariances = (0..dims.users())
        .map(|k| {
            let q = outcome.q_star.get(k);
            let transmit_alignment = (!model.has_los()).then(|| {
                let mut t_sum = CMatrix::zeros(q.nrows(), q.ncols());
                for l in 0..dims.sets() {
                    t_sum += model.t(l, k);
                }
                alignment(q, &t_sum)
            });
            CovarianceReport {
                user: k + 1,
                real: rows(q, |z| z.re),
                imag: rows(q, |z| z.im),
                eigenvalues: HermitianEigen::new(q).values,
                water_level: kkt.users[k].mu,
                transmit_alignment,
            }
        })
        .collect();

    let monte_carlo = match args.mc {
        Some((fading, samples, seed)) => {
            let base = McConfig::new(samples, seed, fading, sigma2);
            let identity = ergodic_sum_rate_mc(&model, &base.clone().with_q(InputCovariances::identity(dims)))?;
            let optimized = ergodic_sum_rate_mc(&model, &base.with_q(outcome.q_star.clone()))?;
            Some(McReport {
                fading: fading.to_string(),
                samples,
                seed,
                identity_mean: identity.mean,
                identity_std_error: identity.std_error,
                optimized_mean: optimized.mean,
                optimized_std_error: optimized.std_error,
            })
        }
        None => None,
    };

    // Re-evaluate at Q* independently of the optimizer's bookkeeping.
    let v_optimized =
        deterministic_sum_rate(&apply_input_covariance(&model, &outcome.q_star)?, sigma2, &cfg.solver_config(sigma2))?.v;
    let report = OptimizeReport {
        snr_db: args.snr_db,
        sigma2,
        v_identity: outcome.trace.v_identity,
        v_optimized,
        kkt_residual: kkt.residual,
        terminated_reason: outcome.trace.terminated,
        iterations: outcome.trace.iterations(),
        covariances,
        trace: outcome
            .trace
            .records
            .iter()
            .map(|r| TraceEntry {
                iteration: r.iteration,
                v: r.v,
                max_dq: r.max_dq,
            })
            .collect(),
        monte_carlo,
    };

    println!("V_N(I)  = {:.10}", report.v_identity);
    println!("V_N(Q*) = {:.10}", report.v_optimized);
    println!("kkt residual = {:e}", report.kkt_residual);
    println!("terminated = {:?} after {} iterations", outcome.trace.terminated, report.iterations);
    for c in &report.covariances {
        let eig: Vec<String> = c.eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
        print!("Q_{} eigenvalues [{}]", c.user, eig.join(", "));
        if let Some(a) = c.transmit_alignment {
            print!("  eigenbasis mismatch vs T: {a:.3e}");
        }
        println!();
    }
    if let Some(mc) = &report.monte_carlo {
        println!(
            "monte-carlo ({}, {} samples): I {:.6} ± {:.6}, Q* {:.6} ± {:.6}",
            mc.fading, mc.samples, mc.identity_mean, mc.identity_std_error, mc.optimized_mean, mc.optimized_std_error
        );
    }
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&args.out, json.as_bytes())
}
