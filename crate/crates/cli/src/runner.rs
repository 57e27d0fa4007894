//! Builds a problem, optimizer, schedule, and metrics from a config, runs
//! the loop, and writes machine-readable outputs.
//!
//! Outputs per run directory:
//! - `steps.csv` with header `step,loss,lr_min,lr_mean,lr_max,grad_norm`
//! - `summary.json`
//! - `trajectory.json` (when the oscillation metric is recorded)
//!
//! Everything is deterministic given the config and master seed: parameter
//! initialization and batch order derive from the seed through a counter
//! stream cipher, and no time- or address-dependent value enters the math.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use adarem::error::Error as CoreError;
use adarem::metrics::{q_metric, regret, LrStats, RegretLedger, TrajectoryRecord};
use adarem::optim::{
    AdaRem, AdaRemConfig, BaselineConfig, BaselineKind, BaselineOptimizer, LambdaCadence,
    Optimizer,
};
use adarem::params::ParamVector;
use adarem::problems::{
    make_logistic, make_online_quadratic, make_scale_invariant_net, random_point, BatchStream,
    Problem,
};
use adarem::project::FeasibleSet;
use adarem::schedule::{Schedule, ScheduleKind};
use adarem::sphere::{project_to_sphere, AdaRemSphere};
use adarem::theory::{self, BoundInputs};

use crate::config::{
    spec_hash, FeasibleSpec, OptimizerSpec, ProblemSpec, RunConfig, ScheduleKindSpec,
    ScheduleSpec,
};
use crate::error::CliError;

/// Half-width of the uniform initialization cube.
const INIT_HALF_WIDTH: f64 = 0.5;

fn stream_seed(master: u64) -> u64 {
    master.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1)
}

fn config_err(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

fn numeric_err(e: CoreError) -> CliError {
    CliError::Numeric(e.to_string())
}

pub fn build_problem(spec: &ProblemSpec, total_steps: usize) -> Result<Box<dyn Problem>, CliError> {
    match spec {
        ProblemSpec::Quadratic {
            dim,
            seed,
            center_bound,
        } => Ok(Box::new(
            make_online_quadratic(*dim, total_steps.max(1), *seed, *center_bound)
                .map_err(config_err)?,
        )),
        ProblemSpec::Logistic {
            dim,
            samples,
            seed,
            batch_size,
        } => Ok(Box::new(
            make_logistic(*dim, *samples, *seed)
                .and_then(|p| p.with_batch_size(*batch_size))
                .map_err(config_err)?,
        )),
        ProblemSpec::ScaleInvariantNet { hidden, seed } => Ok(Box::new(
            make_scale_invariant_net(*hidden, *seed).map_err(config_err)?,
        )),
    }
}

fn build_feasible(spec: &FeasibleSpec, dim: usize) -> Result<FeasibleSet, CliError> {
    match spec {
        FeasibleSpec::Unconstrained => Ok(FeasibleSet::Unconstrained),
        FeasibleSpec::Box { half_width } => {
            FeasibleSet::centered_box(dim, *half_width).map_err(config_err)
        }
    }
}

fn adarem_config(spec: &crate::config::AdaRemSpec, base_lr: f64) -> AdaRemConfig {
    AdaRemConfig {
        base_lr,
        beta: spec.beta,
        lambda: spec.lambda,
        epsilon: spec.epsilon,
        weight_decay: spec.weight_decay,
        lambda_cadence: spec.lambda_cadence,
        max_scope: spec.max_scope,
    }
}

struct BuiltRun {
    optimizer: Box<dyn Optimizer>,
    theta: ParamVector,
}

fn build_optimizer(
    config: &RunConfig,
    dim: usize,
) -> Result<BuiltRun, CliError> {
    let theta0 = random_point(dim, config.seed, INIT_HALF_WIDTH);
    let base_lr = config.schedule.base_lr;
    let slr = config.schedule.kind == ScheduleKindSpec::Slr;
    if slr && !matches!(config.optimizer, OptimizerSpec::AdaRemS(_)) {
        return Err(CliError::Config(
            "the slr schedule requires the adarem_s optimizer".into(),
        ));
    }

    match &config.optimizer {
        OptimizerSpec::AdaRem(spec) => {
            let opt = AdaRem::new(adarem_config(spec, base_lr), dim).map_err(config_err)?;
            Ok(BuiltRun {
                optimizer: Box::new(opt),
                theta: theta0,
            })
        }
        OptimizerSpec::AdaRemS(spec) => {
            let initial_norm = theta0.norm();
            let mut opt = AdaRemSphere::new(
                adarem_config(&spec.adarem(), base_lr),
                dim,
                spec.radius,
                initial_norm,
            )
            .map_err(config_err)?;
            if slr {
                opt = opt.with_slr();
            }
            let theta = project_to_sphere(&theta0, spec.radius).map_err(config_err)?;
            Ok(BuiltRun {
                optimizer: Box::new(opt),
                theta,
            })
        }
        OptimizerSpec::Sgdm {
            momentum,
            weight_decay,
        } => {
            let cfg = BaselineConfig {
                momentum: *momentum,
                weight_decay: *weight_decay,
                ..BaselineConfig::sgdm()
            };
            Ok(BuiltRun {
                optimizer: Box::new(BaselineOptimizer::new(cfg, dim).map_err(config_err)?),
                theta: theta0,
            })
        }
        OptimizerSpec::Adam(spec) | OptimizerSpec::AdamW(spec) => {
            let base = if matches!(config.optimizer, OptimizerSpec::Adam(_)) {
                BaselineConfig::adam()
            } else {
                BaselineConfig::adamw()
            };
            let cfg = BaselineConfig {
                beta1: spec.beta1,
                beta2: spec.beta2,
                epsilon: spec.epsilon,
                weight_decay: spec.weight_decay,
                ..base
            };
            Ok(BuiltRun {
                optimizer: Box::new(BaselineOptimizer::new(cfg, dim).map_err(config_err)?),
                theta: theta0,
            })
        }
        OptimizerSpec::RmsProp {
            beta2,
            epsilon,
            weight_decay,
        } => {
            let cfg = BaselineConfig {
                beta2: *beta2,
                epsilon: *epsilon,
                weight_decay: *weight_decay,
                ..BaselineConfig::rmsprop()
            };
            Ok(BuiltRun {
                optimizer: Box::new(BaselineOptimizer::new(cfg, dim).map_err(config_err)?),
                theta: theta0,
            })
        }
        OptimizerSpec::AdaBound(spec) => {
            let cfg = BaselineConfig {
                kind: BaselineKind::AdaBound,
                momentum: 0.0,
                beta1: spec.beta1,
                beta2: spec.beta2,
                epsilon: spec.epsilon,
                weight_decay: spec.weight_decay,
                final_lr: spec.final_lr,
                bound_zeta: spec.bound_zeta,
            };
            Ok(BuiltRun {
                optimizer: Box::new(BaselineOptimizer::new(cfg, dim).map_err(config_err)?),
                theta: theta0,
            })
        }
    }
}

fn build_stream(spec: &ProblemSpec, problem: &dyn Problem, master_seed: u64, epoch_size: usize) -> BatchStream {
    match spec {
        // online streams consume a fresh round per step
        ProblemSpec::Quadratic { .. } => BatchStream::sequential(problem.n_batches(), epoch_size),
        ProblemSpec::Logistic { .. } => {
            BatchStream::random(problem.n_batches(), epoch_size, stream_seed(master_seed))
        }
        ProblemSpec::ScaleInvariantNet { .. } => {
            BatchStream::sequential(problem.n_batches(), epoch_size)
        }
    }
}

fn base_schedule(spec: &ScheduleSpec) -> Result<Schedule, CliError> {
    let kind = match spec.kind {
        ScheduleKindSpec::Cosine => ScheduleKind::Cosine,
        ScheduleKindSpec::InvSqrt => ScheduleKind::InvSqrt,
        // the sphere-rate conversion happens inside the optimizer; the base
        // sequence it converts is the constant unconstrained-side rate
        ScheduleKindSpec::Constant | ScheduleKindSpec::Slr => ScheduleKind::Constant,
    };
    Schedule::new(kind, spec.base_lr, spec.total_steps).map_err(config_err)
}

#[derive(Debug, Clone, Serialize)]
pub struct QSummary {
    pub value: f64,
    pub n_included: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegretSummary {
    pub regret: f64,
    /// Closed-form bound, present only when the run matches the guaranteed
    /// regime (online quadratics, box set, zero-decay per-step adarem,
    /// inverse-sqrt schedule).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<QSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret: Option<RegretSummary>,
    pub wall_time_s: f64,
    pub per_epoch_loss: Vec<f64>,
    pub config: RunConfig,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn validate(config: &RunConfig) -> Result<(), CliError> {
    if config.schedule.total_steps == 0 {
        return Err(CliError::Config("total_steps must be at least 1".into()));
    }
    if config.schedule.epochs == 0 || config.schedule.epochs > config.schedule.total_steps {
        return Err(CliError::Config(format!(
            "epochs must be in 1..=total_steps, got {}",
            config.schedule.epochs
        )));
    }
    if !(config.schedule.base_lr > 0.0) {
        return Err(CliError::Config(format!(
            "base_lr must be positive, got {}",
            config.schedule.base_lr
        )));
    }
    Ok(())
}

/// Whether this run is inside the regime the regret bound is stated for.
fn bound_inputs_for(config: &RunConfig, problem: &dyn Problem, feasible: &FeasibleSet) -> Option<BoundInputs> {
    let OptimizerSpec::AdaRem(spec) = &config.optimizer else {
        return None;
    };
    if config.schedule.kind != ScheduleKindSpec::InvSqrt
        || spec.weight_decay != 0.0
        || spec.lambda_cadence != LambdaCadence::PerStep
    {
        return None;
    }
    let d_inf = feasible.diameter_inf();
    if !d_inf.is_finite() {
        return None;
    }
    let g2 = problem.grad_bound(feasible)?;
    Some(BoundInputs {
        d_inf,
        g2,
        dim: problem.dim(),
        eta: config.schedule.base_lr,
        lambda: spec.lambda,
        rounds: config.schedule.total_steps,
    })
}

/// Runs the config and writes `steps.csv`, `summary.json`, and (with the
/// oscillation metric on) `trajectory.json` into `out_dir`. On a numeric
/// failure mid-run the partial CSV is flushed and the summary carries the
/// error before the error is returned.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    validate(config)?;
    let started = Instant::now();
    let total_steps = config.schedule.total_steps;
    let steps_per_epoch = (total_steps / config.schedule.epochs).max(1);

    let problem = build_problem(&config.problem, total_steps)?;
    let dim = problem.dim();
    let feasible = build_feasible(&config.feasible, dim)?;
    let built = build_optimizer(config, dim)?;
    let schedule = base_schedule(&config.schedule)?;
    let mut stream = build_stream(&config.problem, problem.as_ref(), config.seed, steps_per_epoch);

    let mut optimizer = built.optimizer;
    let mut theta = built.theta;
    if let FeasibleSet::Box { .. } = feasible {
        let mut vals = theta.values().to_vec();
        feasible.clamp_in_place(&mut vals);
        theta = theta.with_values(vals).map_err(config_err)?;
    }

    fs::create_dir_all(out_dir)?;
    let mut csv = std::io::BufWriter::new(fs::File::create(out_dir.join("steps.csv"))?);
    writeln!(csv, "step,loss,lr_min,lr_mean,lr_max,grad_norm")?;

    let mut trajectory = config.metrics.record_q.then(TrajectoryRecord::new);
    let mut ledger = config.metrics.record_regret.then(RegretLedger::new);
    let mut losses: Vec<f64> = Vec::with_capacity(total_steps);
    let mut failure: Option<CliError> = None;

    for t in 1..=total_steps {
        let epoch_boundary = t > 1 && (t - 1) % steps_per_epoch == 0;
        optimizer.advance_lambda(epoch_boundary);

        let batch = stream.next_id();
        let outcome = (|| -> Result<(f64, ParamVector, f64), CoreError> {
            let loss = problem.loss(&theta, batch)?;
            let grad = problem.gradient(&theta, batch)?;
            let base_lr = schedule.lr_at(t - 1);
            let next = optimizer.step(&theta, &grad, base_lr, &feasible)?;
            Ok((loss, next, grad.norm()))
        })();

        let (loss, next, grad_norm) = match outcome {
            Ok(v) => v,
            Err(e) => {
                failure = Some(numeric_err(e));
                break;
            }
        };

        let stats = LrStats::from_rates(optimizer.last_rates());
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            t, loss, stats.min, stats.mean, stats.max, grad_norm
        )?;
        if let Some(rec) = trajectory.as_mut() {
            if t > config.metrics.q_window_start {
                rec.record_step(&theta, &next, loss, optimizer.last_rates())
                    .map_err(numeric_err)?;
            }
        }
        if let Some(l) = ledger.as_mut() {
            l.record(batch, loss);
        }
        losses.push(loss);
        theta = next;
    }
    csv.flush()?;

    let per_epoch_loss: Vec<f64> = losses
        .chunks(steps_per_epoch)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect();

    let q = match (&trajectory, failure.is_none()) {
        (Some(rec), true) if rec.steps() > 0 => {
            let (value, n_included) =
                q_metric(rec, config.metrics.min_displacement).map_err(numeric_err)?;
            Some(QSummary { value, n_included })
        }
        _ => None,
    };

    let regret_summary = match (&ledger, failure.is_none()) {
        (Some(l), true) => {
            let r = regret(l, problem.as_ref(), &feasible).map_err(numeric_err)?;
            let bound = bound_inputs_for(config, problem.as_ref(), &feasible)
                .map(|inputs| theory::regret_bound(&inputs).map_err(numeric_err))
                .transpose()?;
            Some(RegretSummary { regret: r, bound })
        }
        _ => None,
    };

    let summary = RunSummary {
        final_loss: losses.last().copied().unwrap_or(f64::NAN),
        q,
        regret: regret_summary,
        wall_time_s: started.elapsed().as_secs_f64(),
        per_epoch_loss,
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        error: failure.as_ref().map(|e| e.to_string()),
    };
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;

    if let Some(rec) = &trajectory {
        #[derive(Serialize)]
        struct Trajectory<'a> {
            path_length: &'a [f64],
            start_value: &'a [f64],
            last_value: &'a [f64],
        }
        fs::write(
            out_dir.join("trajectory.json"),
            serde_json::to_string(&Trajectory {
                path_length: rec.path_lengths(),
                start_value: rec.start_values(),
                last_value: rec.last_values(),
            })? + "\n",
        )?;
    }

    match failure {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub optimizer: String,
    pub final_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_to_threshold: Option<usize>,
    pub problem_hash: String,
}

/// Runs each config sequentially (they must share problem and seed) and
/// writes `comparison.csv` / `comparison.json` to `out_dir`.
pub fn compare(
    configs: &[RunConfig],
    out_dir: &Path,
    loss_threshold: Option<f64>,
) -> Result<Vec<CompareRow>, CliError> {
    let first = configs
        .first()
        .ok_or_else(|| CliError::Config("compare needs at least one config".into()))?;
    for c in configs {
        if c.problem != first.problem || c.seed != first.seed {
            return Err(CliError::Config(
                "compare requires identical problem and seed across configs".into(),
            ));
        }
    }

    fs::create_dir_all(out_dir)?;
    let problem_hash = spec_hash(&first.problem);
    let mut rows = Vec::with_capacity(configs.len());
    for (i, config) in configs.iter().enumerate() {
        let run_dir = out_dir.join(format!("run_{i}_{}", config.optimizer.name()));
        let summary = run(config, &run_dir)?;
        let steps_to_threshold = loss_threshold.and_then(|thr| {
            let csv = fs::read_to_string(run_dir.join("steps.csv")).ok()?;
            csv.lines().skip(1).find_map(|line| {
                let mut cols = line.split(',');
                let step: usize = cols.next()?.parse().ok()?;
                let loss: f64 = cols.next()?.parse().ok()?;
                (loss <= thr).then_some(step)
            })
        });
        rows.push(CompareRow {
            optimizer: config.optimizer.name().to_string(),
            final_loss: summary.final_loss,
            q: summary.q.map(|q| q.value),
            steps_to_threshold,
            problem_hash: problem_hash.clone(),
        });
    }

    let mut table = String::from("optimizer,final_loss,q,steps_to_threshold,problem_hash\n");
    for row in &rows {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            row.optimizer,
            row.final_loss,
            row.q.map(|q| q.to_string()).unwrap_or_default(),
            row.steps_to_threshold
                .map(|s| s.to_string())
                .unwrap_or_default(),
            row.problem_hash
        ));
    }
    fs::write(out_dir.join("comparison.csv"), table)?;
    fs::write(
        out_dir.join("comparison.json"),
        serde_json::to_string_pretty(&rows)? + "\n",
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub regret: f64,
    pub bound: f64,
    pub margin: f64,
    pub rounds: usize,
    pub config_hash: String,
    pub avg_regret_checkpoints: Vec<(usize, f64)>,
}

/// Runs the regret-bound verifier in its exact regime and writes
/// `verify.json`. A bound violation is an error (exit code 4) but the report
/// is still written.
pub fn verify(config: &RunConfig, out_dir: &Path) -> Result<VerifyReport, CliError> {
    validate(config)?;
    let OptimizerSpec::AdaRem(spec) = &config.optimizer else {
        return Err(CliError::Config(
            "the verifier checks the adarem optimizer only".into(),
        ));
    };
    if config.schedule.kind != ScheduleKindSpec::InvSqrt {
        return Err(CliError::Config(format!(
            "the verifier refuses {:?} schedules: the bound is stated for the inverse-sqrt schedule",
            config.schedule.kind
        )));
    }
    if !matches!(config.problem, ProblemSpec::Quadratic { .. }) {
        return Err(CliError::Config(
            "the verifier needs the online quadratic stream (closed-form comparator)".into(),
        ));
    }

    let rounds = config.schedule.total_steps;
    let problem = build_problem(&config.problem, rounds)?;
    let feasible = build_feasible(&config.feasible, problem.dim())?;
    let cfg = adarem_config(spec, config.schedule.base_lr);

    let mut checkpoints: Vec<usize> = Vec::new();
    let mut t = 10;
    while t < rounds {
        checkpoints.push(t);
        t *= 10;
    }
    checkpoints.push(rounds);

    let outcome = theory::verify_regret_bound(problem.as_ref(), &feasible, &cfg, rounds, &checkpoints)
        .map_err(|e| match e {
            CoreError::Precondition(m) | CoreError::Config(m) | CoreError::Unsupported(m) => {
                CliError::Config(m)
            }
            other => CliError::Numeric(other.to_string()),
        })?;

    let report = VerifyReport {
        regret: outcome.regret,
        bound: outcome.bound,
        margin: outcome.bound - outcome.regret,
        rounds: outcome.rounds,
        config_hash: spec_hash(config),
        avg_regret_checkpoints: outcome.avg_regret_checkpoints,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("verify.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    if report.regret > report.bound {
        return Err(CliError::Contract(format!(
            "regret {} exceeds bound {}",
            report.regret, report.bound
        )));
    }
    Ok(report)
}
