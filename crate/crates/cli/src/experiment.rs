//! Runs the strategy × map cells of a config and writes traces and a summary.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use fwaffine::analysis::{
    compare_runs, default_h_grid, estimate_c_omega, estimate_directional_smoothness, linear_step_check, random_probes,
    rate_fit, reference_fstar, theory_bound_linear, trajectory_probes, ConstantSource, CovarianceReport,
    TheoryConstants, BURN_IN,
};
use fwaffine::geometry::{ChordInset, ConvexBody, Gauge};
use fwaffine::par::{seeded_rng, Execution, Sampling};
use fwaffine::problems::{
    erm_problem, load_dataset_csv, projection_problem, synthesize_dataset, transform_problem, AffineMap, FeasibleSet,
    Loss, Problem, TaskKind,
};
use fwaffine::solver::{fw_run, StopCriteria, Trace};
use fwaffine::stepsize::{build_strategy, AffineBacktracking, ExactLineSearch, StrategyKind, StrategyParams};
use fwaffine::Vector;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, MapSpec, ProblemKind};

pub const CSV_HEADER: [&str; 8] =
    ["iter", "gap", "primal_gap", "step", "L_estimate", "lmo_calls", "f_evals", "grad_evals"];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] fwaffine::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub output_dir: PathBuf,
    pub dataset: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub strategy: StrategyKind,
    pub map: MapSpec,
    pub map_index: usize,
}

impl Cell {
    pub fn file_name(&self, kind: ProblemKind) -> String {
        format!("{}_{}_{}.csv", kind.name(), self.strategy.name(), self.map.name())
    }
}

/// Strategy-major list of cells.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    config
        .strategies
        .iter()
        .flat_map(|&strategy| {
            config.maps.iter().enumerate().map(move |(map_index, &map)| Cell { strategy, map, map_index })
        })
        .collect()
}

pub fn dry_run(config: &ExperimentConfig, opts: &RunOptions) -> String {
    let mut out = format!(
        "problem {} (d={}), seed {}, {} cells -> {}\n",
        config.kind.name(),
        config.dimension(),
        opts.seed,
        cells(config).len(),
        opts.output_dir.display()
    );
    for c in cells(config) {
        out.push_str(&format!("  {:<20} {:<12} {}\n", c.strategy.name(), c.map.name(), c.file_name(config.kind)));
    }
    out
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.serialize().as_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FstarSource {
    Analytic,
    ReferenceRun,
}

impl FstarSource {
    pub fn name(self) -> &'static str {
        match self {
            FstarSource::Analytic => "analytic",
            FstarSource::ReferenceRun => "reference-run",
        }
    }
}

/// The untransformed problem of a config, with `f*` attached.
pub fn build_problem(config: &ExperimentConfig, opts: &RunOptions) -> Result<(Problem, FstarSource), RunError> {
    let d = config.dimension();
    match config.kind {
        ProblemKind::Projection => {
            let target = Vector::from_element(d, config.ratio * config.radius / (d as f64).sqrt());
            let x0 = FeasibleSet::centered_ball(d, config.radius)?.random_member(&mut seeded_rng(opts.seed));
            let label = format!("projection(d={d},ratio={})", config.ratio);
            Ok((projection_problem(target, config.radius, x0, label)?, FstarSource::Analytic))
        }
        ProblemKind::QuadraticErm | ProblemKind::LogisticErm => {
            let (loss, task) = if config.kind == ProblemKind::QuadraticErm {
                (Loss::Quadratic, TaskKind::Regression)
            } else {
                (Loss::Logistic, TaskKind::Classification)
            };
            let dataset = match opts.dataset.as_ref().or(config.dataset.as_ref()) {
                Some(path) => load_dataset_csv(path, config.has_header)?,
                None => synthesize_dataset(config.samples, d, task, opts.seed)?,
            };
            let p = erm_problem(&dataset, loss, config.ratio)?;
            let fstar = reference_fstar(&p, 10 * config.max_iters)?;
            Ok((p.with_fstar(fstar), FstarSource::ReferenceRun))
        }
    }
}

fn map_seed(config: &ExperimentConfig, opts: &RunOptions) -> u64 {
    config.map_seed.unwrap_or(opts.seed.wrapping_add(1))
}

pub fn build_map(
    config: &ExperimentConfig,
    opts: &RunOptions,
    map: MapSpec,
    dim: usize,
) -> Result<Option<AffineMap>, RunError> {
    Ok(match map {
        MapSpec::Identity => None,
        MapSpec::Random { condition_number } => Some(AffineMap::random(dim, condition_number, map_seed(config, opts))?),
    })
}

fn params(config: &ExperimentConfig) -> StrategyParams {
    StrategyParams {
        initial_constant: config.initial_constant,
        directional: config.directional_constant,
        modified: config.modified_constant,
        ..StrategyParams::default()
    }
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub csv: PathBuf,
    pub trace: Option<Trace>,
    pub error: Option<String>,
    pub assertions: Vec<Assertion>,
}

impl CellOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug)]
pub struct InvarianceOutcome {
    pub report: CovarianceReport,
    pub passed: bool,
}

#[derive(Debug)]
pub struct Experiment {
    pub problem: String,
    pub fstar: Option<f64>,
    pub fstar_source: FstarSource,
    pub cells: Vec<CellOutcome>,
    pub invariance: Vec<InvarianceOutcome>,
    pub summary: PathBuf,
}

impl Experiment {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellOutcome::passed) && self.invariance.iter().all(|i| i.passed)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::Write { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(CSV_HEADER).map_err(io)?;
    let last = trace.records.len() - 1;
    for (i, r) in trace.records.iter().enumerate() {
        let took_step = i < last;
        w.write_record([
            r.k.to_string(),
            num(r.gap),
            r.primal_gap.map(num).unwrap_or_default(),
            if took_step { num(r.gamma) } else { String::new() },
            r.constant.filter(|_| took_step).map(num).unwrap_or_default(),
            r.lmo_calls.to_string(),
            r.f_evals.to_string(),
            r.grad_evals.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Write { path: path.to_path_buf(), source: e })
}

fn cell_assertions(kind: StrategyKind, trace: &Trace, fstar_source: FstarSource) -> Vec<Assertion> {
    let mut out = Vec::new();
    if let Some(h) = trace.primal_gaps() {
        let worst = trace.records.iter().zip(&h).map(|(r, h)| r.gap + 1e-10 - h).fold(f64::INFINITY, f64::min);
        out.push(Assertion {
            name: "gap_certificate",
            passed: worst >= 0.0,
            detail: format!("min (gap + 1e-10 - primal gap) = {worst:.3e}"),
        });
    }
    if matches!(kind, StrategyKind::Exact | StrategyKind::NormBacktracking | StrategyKind::AffineBacktracking) {
        let worst = trace.records.windows(2).map(|w| w[0].value + 1e-12 - w[1].value).fold(f64::INFINITY, f64::min);
        out.push(Assertion {
            name: "monotone",
            passed: worst >= 0.0,
            detail: format!("min (f_k + 1e-12 - f_k+1) = {worst:.3e}"),
        });
    }
    if kind == StrategyKind::AffineBacktracking && fstar_source == FstarSource::Analytic {
        match linear_step_check(trace) {
            Ok(r) => out.push(Assertion {
                name: "per_step_rate",
                passed: r.passed,
                detail: format!("worst slack {:.3e}", r.worst_slack),
            }),
            Err(e) => out.push(Assertion { name: "per_step_rate", passed: false, detail: e.to_string() }),
        }
    }
    out
}

fn invariance_passed(r: &CovarianceReport) -> bool {
    match r.strategy {
        StrategyKind::AffineBacktracking => {
            r.step_deviation <= 1e-6
                && r.constant_deviation.is_some_and(|d| d <= 1e-6)
                && r.max_constants.is_some_and(|(a, b)| a == b)
        }
        _ => r.iterate_deviation <= 1e-6 * r.condition_number,
    }
}

fn run_cell(
    cell: Cell,
    problems: &[Problem],
    config: &ExperimentConfig,
    fstar_source: FstarSource,
    dir: &Path,
) -> CellOutcome {
    let csv = dir.join(cell.file_name(config.kind));
    let problem = &problems[cell.map_index];
    let stop = StopCriteria { max_iters: config.max_iters, gap_tol: config.gap_tol, ..StopCriteria::default() };
    let result = build_strategy(cell.strategy, &params(config), problem)
        .and_then(|mut s| fw_run(problem, s.as_mut(), &stop))
        .map_err(RunError::from)
        .and_then(|t| write_trace_csv(&t, &csv).map(|_| t));
    match result {
        Ok(trace) => CellOutcome {
            cell,
            csv,
            assertions: cell_assertions(cell.strategy, &trace, fstar_source),
            trace: Some(trace),
            error: None,
        },
        Err(e) => CellOutcome { cell, csv, trace: None, error: Some(e.to_string()), assertions: Vec::new() },
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| RunError::Pool(e.to_string()))
}

fn opt(v: Option<f64>) -> Value {
    v.filter(|x| x.is_finite()).map_or(Value::Null, |x| json!(x))
}

fn cell_json(o: &CellOutcome, dir: &Path) -> Value {
    let rel = o.csv.strip_prefix(dir).unwrap_or(&o.csv).display().to_string();
    let assertions: Vec<Value> =
        o.assertions.iter().map(|a| json!({"name": a.name, "passed": a.passed, "detail": a.detail})).collect();
    let mut v = json!({
        "type": "cell",
        "strategy": o.cell.strategy.name(),
        "map": o.cell.map.name(),
        "csv": rel,
        "passed": o.passed(),
        "assertions": assertions,
        "error": o.error,
    });
    if let Some(t) = &o.trace {
        let last = t.last();
        let max_constant = t.steps().iter().filter_map(|r| r.constant).reduce(f64::max);
        let rate = t.primal_gaps().and_then(|h| {
            let end = h.iter().position(|&x| x <= 0.0).unwrap_or(h.len());
            rate_fit(&h[..end], BURN_IN..end, 1.0).ok().and_then(|r| r.empirical_rho)
        });
        v["iterations"] = json!(t.steps().len());
        v["terminated_by"] = json!(t.terminated_by.name());
        v["final_gap"] = opt(Some(last.gap));
        v["final_primal_gap"] = opt(last.primal_gap);
        v["max_constant"] = opt(max_constant);
        v["empirical_rate"] = opt(rate);
    }
    v
}

/// Runs every cell (in parallel up to `jobs`), writes one CSV per cell and a
/// JSON-lines summary, and evaluates the embedded assertions.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<Experiment, RunError> {
    let dir = &opts.output_dir;
    fs::create_dir_all(dir).map_err(|e| RunError::Write { path: dir.clone(), source: e })?;
    let (base, fstar_source) = build_problem(config, opts)?;
    let problems = config
        .maps
        .iter()
        .map(|&m| match build_map(config, opts, m, base.dim())? {
            None => Ok(base.clone()),
            Some(map) => Ok(transform_problem(&base, &map)?),
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let all = cells(config);
    let outcomes: Vec<CellOutcome> = pool(opts.jobs)?
        .install(|| all.par_iter().map(|&c| run_cell(c, &problems, config, fstar_source, dir)).collect());

    let mut invariance = Vec::new();
    for o in &outcomes {
        let (MapSpec::Random { .. }, Some(t)) = (o.cell.map, &o.trace) else { continue };
        if !o.cell.strategy.is_affine_covariant() {
            continue;
        }
        let reference = outcomes.iter().find(|r| r.cell.strategy == o.cell.strategy && r.cell.map == MapSpec::Identity);
        let Some(original) = reference.and_then(|r| r.trace.clone()) else { continue };
        let map = build_map(config, opts, o.cell.map, base.dim())?.expect("random map");
        let report = compare_runs(o.cell.strategy, &map, original, t.clone());
        let passed = invariance_passed(&report);
        invariance.push(InvarianceOutcome { report, passed });
    }

    let summary = dir.join("summary.jsonl");
    let mut lines = vec![json!({
        "type": "experiment",
        "config_sha256": config_hash(config),
        "seed": opts.seed,
        "problem": base.label(),
        "fstar": opt(base.fstar()),
        "fstar_source": fstar_source.name(),
        "cells": outcomes.len(),
    })];
    lines.extend(outcomes.iter().map(|o| cell_json(o, dir)));
    for i in &invariance {
        let r = &i.report;
        lines.push(json!({
            "type": "invariance",
            "strategy": r.strategy.name(),
            "condition_number": r.condition_number,
            "compared": r.compared,
            "iterate_deviation": r.iterate_deviation,
            "step_deviation": r.step_deviation,
            "constant_deviation": opt(r.constant_deviation),
            "max_constants": r.max_constants.map(|(a, b)| json!([a, b])),
            "passed": i.passed,
        }));
    }
    let experiment = Experiment {
        problem: base.label().to_string(),
        fstar: base.fstar(),
        fstar_source,
        cells: outcomes,
        invariance,
        summary: summary.clone(),
    };
    lines.push(json!({"type": "result", "passed": experiment.passed()}));
    let write_err = |e| RunError::Write { path: summary.clone(), source: e };
    let mut f = fs::File::create(&summary).map_err(write_err)?;
    for l in &lines {
        writeln!(f, "{l}").map_err(write_err)?;
    }
    Ok(experiment)
}

/// Constants of one map cell of a config.
#[derive(Clone, Debug)]
pub struct CellConstants {
    pub map: MapSpec,
    pub theory: TheoryConstants,
    pub bound: Option<f64>,
    pub estimate: f64,
}

/// Theory constants (Euclidean gauge, closed-form set constant, sampled `c`)
/// and the trajectory estimate of the directional constant, per map.
pub fn constants(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<CellConstants>, RunError> {
    let (base, _) = build_problem(config, opts)?;
    let exec = Execution::default();
    let mut out = Vec::new();
    for (i, &m) in config.maps.iter().enumerate() {
        let p = match build_map(config, opts, m, base.dim())? {
            None => base.clone(),
            Some(map) => transform_problem(&base, &map)?,
        };
        let stop = StopCriteria::iterations(config.max_iters);
        let exact = fw_run(&p, &mut ExactLineSearch, &stop)?;
        let affine = fw_run(&p, &mut AffineBacktracking::new(config.initial_constant)?, &stop)?;
        let mut probes = trajectory_probes(&exact);
        probes.extend(trajectory_probes(&affine));
        let seed = opts.seed.wrapping_add(100 + i as u64);
        probes.extend(random_probes(&p, Sampling::new(200, seed).with_exec(exec)));
        let estimate = estimate_directional_smoothness(&p, &probes, &default_h_grid(), exec)?.value;
        let gauge = Gauge::euclidean(p.dim());
        let c = estimate_c_omega(&p, &gauge, &probes, Sampling::new(10_000, seed + 1).with_exec(exec))?;
        let known = p.objective().known();
        let theory = TheoryConstants {
            gauge: gauge.label(),
            smoothness: known.smoothness.unwrap_or(f64::NAN),
            strong_convexity: known.strong_convexity,
            alpha: p.set().euclidean_certificate(ChordInset::Full)?.alpha,
            c,
            kappa: 1.0,
            source: ConstantSource::Oracle,
        };
        let bound = theory_bound_linear(&theory).ok();
        out.push(CellConstants { map: m, theory, bound, estimate });
    }
    Ok(out)
}
