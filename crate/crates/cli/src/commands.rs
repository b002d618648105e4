//! Command implementations shared by the subcommands.

use crate::ingest::{self, IngestError, Normalize};
use crate::report::{
    self, BaselineDoc, CompareDoc, DistanceEntry, EtaDoc, LabeledPoint, MedianDoc, RatioRow,
    RunMeta, SolveDoc, SweepDoc,
};
use crate::{InputArgs, SolverArgs};
use rayon::prelude::*;
use spherical_cluster::{
    brute_force_min, build_problem, eta_report, medians, objective, principal_projection,
    quasi_newton_min, solve, stats::StatsError, subgradient_min, BaselineMethod, Dataset64,
    ModelError, ScProblem64, SolveError, SolverConfig, Start, Trajectory64,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver did not converge within the step limit")]
    NotConverged,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Ingest(e) => e.category(),
            CliError::Config(_) | CliError::Model(_) => "config",
            CliError::NotConverged => "not_converged",
            CliError::Solve(_) | CliError::Stats(_) => "numeric",
            CliError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::NotConverged => 4,
            CliError::Solve(_) | CliError::Stats(_) => 5,
        }
    }
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_output(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Deterministic per-component seeds from the master seed (splitmix64).
fn component_seed(master: u64, component: u64) -> u64 {
    let mut z = master
        .wrapping_add(component.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn load(input: &InputArgs) -> Result<Dataset64, CliError> {
    Ok(ingest::ingest(
        &input.input,
        input.delimiter,
        input.has_header,
        input.normalize,
    )?)
}

fn normalize_label(n: Normalize) -> &'static str {
    match n {
        Normalize::None => "none",
        Normalize::Minmax => "minmax",
    }
}

fn meta(command: &str, input: &InputArgs, dataset: &Dataset64) -> RunMeta {
    RunMeta {
        command: command.to_string(),
        input: input.input.display().to_string(),
        n: dataset.len(),
        d: dataset.dim(),
        normalize: normalize_label(input.normalize).to_string(),
        seed: input.seed,
    }
}

fn parse_start(spec: &str, dim: usize, seed: u64) -> Result<Start<f64>, CliError> {
    match spec {
        "mean" => Ok(Start::Mean),
        "random" => Ok(Start::Random(component_seed(seed, 1))),
        other => {
            let coords: Result<Vec<f64>, _> = other.split(',').map(|t| t.trim().parse()).collect();
            let coords = coords
                .map_err(|_| CliError::Config(format!("cannot parse start point {other:?}")))?;
            if coords.len() != dim {
                return Err(CliError::Config(format!(
                    "start point has {} coordinates, data has {}",
                    coords.len(),
                    dim
                )));
            }
            Ok(Start::Point(coords))
        }
    }
}

fn solver_config(
    args: &SolverArgs,
    input: &InputArgs,
    dim: usize,
) -> Result<SolverConfig<f64>, CliError> {
    Ok(SolverConfig {
        tol_grad: args.tol_grad,
        tol_sign: args.tol_sign,
        max_steps: args.max_steps,
        start: parse_start(&args.start, dim, input.seed)?,
        seed: component_seed(input.seed, 2),
        ..SolverConfig::default()
    })
}

fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Parse "start:stop:step" into a snapped, inclusive grid.
fn parse_eta_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "eta grid must be start:stop:step, got {spec:?}"
        )));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|t| t.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|_| CliError::Config(format!("cannot parse eta grid {spec:?}")))?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if nums.iter().any(|v| !v.is_finite()) || step <= 0.0 || stop < start {
        return Err(CliError::Config(format!("empty eta grid {spec:?}")));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let v = snap(start + step * k as f64);
        if v > stop + step * 1e-6 {
            break;
        }
        out.push(v);
        k += 1;
    }
    Ok(out)
}

/// Drop grid values outside (0, 1 - 1/n), warning on stderr.
fn clip_etas(etas: Vec<f64>, dataset: &Dataset64) -> Result<Vec<f64>, CliError> {
    let bound = 1.0 - 1.0 / dataset.len() as f64;
    let (keep, drop): (Vec<f64>, Vec<f64>) =
        etas.into_iter().partition(|&e| e > 0.0 && e < bound);
    if !drop.is_empty() {
        eprintln!(
            "warning: dropped eta values {:?} outside (0, {bound}) for n = {}",
            drop,
            dataset.len()
        );
    }
    if keep.is_empty() {
        return Err(CliError::Config(format!(
            "no eta value left in (0, {bound})"
        )));
    }
    Ok(keep)
}

fn check_eta(eta: f64, dataset: &Dataset64) -> Result<(), CliError> {
    let bound = 1.0 - 1.0 / dataset.len() as f64;
    if eta > 0.0 && eta < bound {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "eta = {eta} outside (0, {bound}) for n = {}",
            dataset.len()
        )))
    }
}

struct SolvedEta {
    doc: EtaDoc,
    trajectory: Trajectory64,
    problem: ScProblem64,
    wall: Duration,
}

fn solve_one(
    dataset: &Dataset64,
    eta: f64,
    config: &SolverConfig<f64>,
) -> Result<SolvedEta, CliError> {
    let problem = build_problem(dataset.clone(), eta)?;
    let timer = Instant::now();
    let trajectory = solve(&problem, config)?;
    let wall = timer.elapsed();
    if !trajectory.converged {
        return Err(CliError::NotConverged);
    }
    let rep = eta_report(&problem, &trajectory, Vec::new())?;
    let doc = report::eta_doc(&rep, problem.eta_prime(), &trajectory);
    Ok(SolvedEta {
        doc,
        trajectory,
        problem,
        wall,
    })
}

struct TimedBaseline {
    doc: BaselineDoc,
    wall: Duration,
}

fn run_baseline(
    problem: &ScProblem64,
    method: &str,
    config: &SolverConfig<f64>,
) -> Result<Option<TimedBaseline>, CliError> {
    let start = problem.mean().to_vec();
    let result = match method {
        "bfgs" => quasi_newton_min(problem, &start, false, config.tol_grad),
        "lbfgs" => quasi_newton_min(problem, &start, true, config.tol_grad),
        "subgradient" => subgradient_min(problem, &start, 10_000),
        "brute" => {
            let timer = Instant::now();
            let tol = 1e-6 * (1.0 + problem.extent());
            let point = match brute_force_min(problem, tol) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("warning: brute-force oracle skipped: {e}");
                    return Ok(None);
                }
            };
            let f = objective(problem, &point);
            return Ok(Some(TimedBaseline {
                doc: BaselineDoc {
                    method: BaselineMethod::BruteForce.label().to_string(),
                    f_value: f,
                    center: point,
                    iterations: 0,
                    f_evals: 0,
                    line_search_failed: false,
                },
                wall: timer.elapsed(),
            }));
        }
        "exact" => return Ok(None),
        other => {
            return Err(CliError::Config(format!("unknown solver {other:?}")));
        }
    };
    Ok(Some(TimedBaseline {
        wall: result.wall_time,
        doc: BaselineDoc {
            method: result.method.label().to_string(),
            f_value: result.f_value,
            center: result.final_point,
            iterations: result.iterations,
            f_evals: result.f_evals,
            line_search_failed: result.line_search_failed,
        },
    }))
}

pub fn cmd_solve(
    input: &InputArgs,
    solver: &SolverArgs,
    eta: f64,
    solvers: &str,
    out: Option<PathBuf>,
    trace: Option<PathBuf>,
    projection: Option<PathBuf>,
) -> Result<(), CliError> {
    let dataset = load(input)?;
    check_eta(eta, &dataset)?;
    let config = solver_config(solver, input, dataset.dim())?;
    let mut solved = solve_one(&dataset, eta, &config)?;
    eprintln!(
        "exact: F = {:.6e}, |grad| = {:.2e}, steps = {}, {:?}",
        solved.doc.f_value,
        solved.doc.gen_grad_norm,
        solved.trajectory.step_counts.total(),
        solved.wall
    );

    for method in solvers.split(',').map(str::trim) {
        if method.is_empty() || method == "exact" {
            continue;
        }
        if let Some(tb) = run_baseline(&solved.problem, method, &config)? {
            eprintln!(
                "{}: F = {:.6e}, {:?}",
                tb.doc.method, tb.doc.f_value, tb.wall
            );
            solved.doc.baselines.push(tb.doc);
        }
    }

    if let Some(path) = &trace {
        write_output(path, &report::trace_table(&solved.trajectory))?;
    }
    if let Some(path) = &projection {
        if dataset.dim() >= 2 {
            let labeled = vec![
                ("mean".to_string(), solved.problem.mean().to_vec()),
                ("sc_center".to_string(), solved.trajectory.final_point.clone()),
            ];
            let table = principal_projection(
                &dataset,
                &labeled,
                &solved.problem,
                &solved.trajectory.final_point,
            )?;
            write_output(path, &report::projection_table(&table))?;
        } else {
            eprintln!("warning: projection table needs d >= 2, skipped");
        }
    }

    let doc = SolveDoc {
        meta: meta("solve", input, &dataset),
        eta: solved.doc,
    };
    emit(&out, &report::to_json(&doc))
}

pub fn cmd_sweep(
    input: &InputArgs,
    solver: &SolverArgs,
    etas: &str,
    out: Option<PathBuf>,
    table: Option<PathBuf>,
) -> Result<(), CliError> {
    let dataset = load(input)?;
    let grid = clip_etas(parse_eta_grid(etas)?, &dataset)?;
    let config = solver_config(solver, input, dataset.dim())?;
    let rows: Result<Vec<EtaDoc>, CliError> = grid
        .par_iter()
        .map(|&eta| solve_one(&dataset, eta, &config).map(|s| s.doc))
        .collect();
    let rows = rows?;
    if let Some(path) = &table {
        write_output(path, &report::sweep_table(&rows))?;
    } else {
        eprint!("{}", report::sweep_table(&rows));
    }
    let doc = SweepDoc {
        meta: meta("sweep", input, &dataset),
        rows,
    };
    emit(&out, &report::to_json(&doc))
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn cmd_compare(
    input: &InputArgs,
    solver: &SolverArgs,
    etas: &str,
    solvers: &str,
    repeats: usize,
    out: Option<PathBuf>,
    table: Option<PathBuf>,
) -> Result<(), CliError> {
    if repeats == 0 {
        return Err(CliError::Config("repeats must be at least 1".into()));
    }
    let dataset = load(input)?;
    let grid = clip_etas(parse_eta_grid(etas)?, &dataset)?;
    let config = solver_config(solver, input, dataset.dim())?;
    let methods: Vec<&str> = solvers
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty() && *m != "exact")
        .collect();
    let mut rows = Vec::new();
    for &eta in &grid {
        let mut exact_times = Vec::with_capacity(repeats);
        let mut exact_f = 0.0;
        for _ in 0..repeats {
            let solved = solve_one(&dataset, eta, &config)?;
            exact_times.push(solved.wall.as_secs_f64());
            exact_f = solved.doc.f_value;
        }
        let problem = build_problem(dataset.clone(), eta)?;
        for method in &methods {
            let mut time_ratios = Vec::with_capacity(repeats);
            let mut value_ratios = Vec::with_capacity(repeats);
            for (rep, t_exact) in exact_times.iter().enumerate() {
                let Some(tb) = run_baseline(&problem, method, &config)? else {
                    continue;
                };
                let _ = rep;
                time_ratios.push(t_exact / tb.wall.as_secs_f64().max(1e-12));
                value_ratios.push(exact_f / tb.doc.f_value.max(f64::MIN_POSITIVE));
            }
            if time_ratios.is_empty() {
                continue;
            }
            let (mut t, mut v) = (time_ratios, value_ratios);
            rows.push(RatioRow {
                eta,
                method: method.to_string(),
                time_ratio_min: t.iter().copied().fold(f64::INFINITY, f64::min),
                time_ratio_median: median_of(&mut t),
                time_ratio_max: t.iter().copied().fold(0.0, f64::max),
                value_ratio_min: v.iter().copied().fold(f64::INFINITY, f64::min),
                value_ratio_median: median_of(&mut v),
                value_ratio_max: v.iter().copied().fold(0.0, f64::max),
            });
        }
    }
    if let Some(path) = &table {
        write_output(path, &report::compare_table(&rows))?;
    } else {
        eprint!("{}", report::compare_table(&rows));
    }
    let doc = CompareDoc {
        meta: meta("compare", input, &dataset),
        repeats,
        rows,
    };
    emit(&out, &report::to_json(&doc))
}

pub fn cmd_median(
    input: &InputArgs,
    solver: &SolverArgs,
    etas: &str,
    directions: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let dataset = load(input)?;
    let grid = clip_etas(parse_eta_grid(etas)?, &dataset)?;
    let config = solver_config(solver, input, dataset.dim())?;
    let sc_centers: Result<Vec<(f64, Vec<f64>)>, CliError> = grid
        .par_iter()
        .map(|&eta| solve_one(&dataset, eta, &config).map(|s| (eta, s.trajectory.final_point)))
        .collect();
    let sc_centers = sc_centers?;
    let num_directions =
        directions.unwrap_or_else(|| medians::default_num_directions(dataset.dim()));
    let rep = medians::center_report(
        &dataset,
        sc_centers,
        num_directions,
        component_seed(input.seed, 3),
    );
    let mut centers = vec![
        LabeledPoint {
            label: "mean".into(),
            point: rep.mean.clone(),
        },
        LabeledPoint {
            label: "projection_median".into(),
            point: rep.projection_median.clone(),
        },
    ];
    for (eta, c) in &rep.sc_centers {
        centers.push(LabeledPoint {
            label: format!("sc_eta={eta}"),
            point: c.clone(),
        });
    }
    let doc = MedianDoc {
        meta: meta("median", input, &dataset),
        num_directions,
        centers,
        pairwise_distances: rep
            .pairwise_distances
            .into_iter()
            .map(|(a, b, distance)| DistanceEntry { a, b, distance })
            .collect(),
    };
    emit(&out, &report::to_json(&doc))
}
