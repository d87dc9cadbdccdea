//! Experiment harness behind the `phasemin` binary.
//!
//! Every trial draws its instance and initial iterate from streams derived
//! from `(master_seed, n, m, trial)`, and results are gathered in a fixed
//! order, so outputs do not depend on the number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altmin::{self, SolveConfig, SolveReport, StopReason};
use crate::dynamics::{self, EscapePoint, QuantileSummary};
use crate::error::{Error, Result};
use crate::expectations::{self, CertifyConfig};
use crate::probes::{self, ProbePlan};
use crate::rng;
use crate::sensing::{make_instance, random_unit_iterate, SensingInstance, SignalMode};
use crate::stats;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "PHASEMIN_WORKERS";

/// Child-stream label of the initial iterate within a trial.
const INIT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    PhaseDiagram,
    FgCurve,
    LemmaCheck,
    Dynamics,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::PhaseDiagram => "phase-diagram",
            Command::FgCurve => "fg-curve",
            Command::LemmaCheck => "lemma-check",
            Command::Dynamics => "dynamics",
        }
    }
}

/// Partial configuration; used for both the JSON file and command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub n_list: Option<Vec<usize>>,
    pub m_list: Option<Vec<usize>>,
    /// `m = ratio * n` for each `n`; replaces `m_list` when set.
    pub m_ratios: Option<Vec<usize>>,
    pub trials_per_cell: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub stall_window: Option<usize>,
    pub master_seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub instrumentation: Option<bool>,
    pub n_samples: Option<usize>,
    pub c0: Option<f64>,
    pub grid_step: Option<f64>,
    pub lipschitz: Option<f64>,
    pub curve_step: Option<f64>,
    pub curve_end: Option<f64>,
    pub probes: Option<ProbePlan>,
}

impl ConfigOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidConfig(format!("{}: {e}", path.display()))
        })
    }
}

/// Fully resolved configuration, echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_ratios: Option<Vec<usize>>,
    pub trials_per_cell: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub stall_window: usize,
    pub master_seed: u64,
    /// Not echoed, so that outputs do not depend on where they are written.
    #[serde(skip)]
    pub output_path: PathBuf,
    pub instrumentation: bool,
    pub n_samples: usize,
    pub c0: f64,
    pub grid_step: f64,
    pub lipschitz: f64,
    pub curve_step: f64,
    pub curve_end: f64,
    pub probes: ProbePlan,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let (n_list, m_list, m_ratios, trials) = match command {
            Command::PhaseDiagram => (vec![16, 32], vec![], Some(vec![2, 4, 8, 16]), 100),
            Command::Dynamics => (vec![16, 32, 64, 128], vec![], Some(vec![16]), 20),
            _ => (vec![16], vec![256], None, 1),
        };
        Self {
            command,
            n_list,
            m_list,
            m_ratios,
            trials_per_cell: trials,
            tol: altmin::DEFAULT_TOL,
            max_iter: altmin::DEFAULT_MAX_ITER,
            stall_window: altmin::DEFAULT_STALL_WINDOW,
            master_seed: 0,
            output_path: PathBuf::from("."),
            instrumentation: false,
            n_samples: expectations::DEFAULT_SAMPLES,
            c0: expectations::DEFAULT_C0,
            grid_step: expectations::DEFAULT_GRID_STEP,
            lipschitz: expectations::DEFAULT_LIPSCHITZ,
            curve_step: 0.01,
            curve_end: 0.95,
            probes: ProbePlan::default(),
        }
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = &o.$field { self.$field = v.clone(); } )* };
        }
        set!(
            n_list, m_list, trials_per_cell, tol, max_iter, stall_window, master_seed,
            output_path, instrumentation, n_samples, c0, grid_step, lipschitz, curve_step,
            curve_end, probes
        );
        if o.m_ratios.is_some() {
            self.m_ratios = o.m_ratios.clone();
        } else if o.m_list.is_some() {
            self.m_ratios = None;
        }
    }

    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(command: Command, file: Option<&ConfigOverrides>, flags: &ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::defaults(command);
        if let Some(f) = file {
            cfg.apply(f);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            stall_window: self.stall_window,
        }
    }

    /// `(n, m)` cells sorted by `n`, then `m`.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        let mut cells = Vec::new();
        for &n in &self.n_list {
            match &self.m_ratios {
                Some(ratios) => cells.extend(ratios.iter().map(|r| (n, r * n))),
                None => cells.extend(self.m_list.iter().map(|&m| (n, m))),
            }
        }
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::InvalidConfig("empty (n, m) grid".into()));
        }
        if let Some(&(n, m)) = cells.iter().find(|(n, m)| *n == 0 || m <= n) {
            return Err(Error::InvalidConfig(format!("need 1 <= n < m, got n={n}, m={m}")));
        }
        Ok(cells)
    }

    pub fn validate(&self) -> Result<()> {
        self.solve_config().validate()?;
        if self.trials_per_cell < 1 {
            return Err(Error::InvalidConfig("trials_per_cell must be >= 1".into()));
        }
        if matches!(self.command, Command::Run | Command::PhaseDiagram | Command::Dynamics) {
            self.cells()?;
        }
        if self.command == Command::Dynamics && !self.instrumentation {
            return Err(Error::InvalidConfig("dynamics requires instrumentation (--instrument)".into()));
        }
        if !(self.curve_step > 0.0 && self.curve_end >= 0.0 && self.curve_end < 1.0) {
            return Err(Error::InvalidConfig("fg curve grid must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn certify_config(&self) -> CertifyConfig {
        CertifyConfig {
            c0: self.c0,
            grid_step: self.grid_step,
            n_samples: self.n_samples,
            lipschitz: self.lipschitz,
            seed: rng::derive_seed(self.master_seed, &[1]),
        }
    }
}

/// Seed of trial `trial` in cell `(n, m)`.
pub fn trial_seed(master: u64, n: usize, m: usize, trial: usize) -> u64 {
    rng::derive_seed(master, &[n as u64, m as u64, trial as u64])
}

pub fn trial_setup(master: u64, n: usize, m: usize, trial: usize) -> Result<(SensingInstance, Vec<crate::complex::C64>)> {
    let seed = trial_seed(master, n, m, trial);
    let inst = make_instance(seed, n, m, SignalMode::RandomUnit)?;
    let w1 = random_unit_iterate(&mut rng::child_rng(seed, &[INIT_STREAM]), &inst);
    Ok((inst, w1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub m: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub success: bool,
    pub final_error: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

impl ExperimentRecord {
    fn new(n: usize, m: usize, trial: usize, seed: u64, r: &SolveReport) -> Self {
        Self {
            n,
            m,
            trial_index: trial,
            seed,
            success: r.success,
            final_error: r.final_error,
            iterations: r.iterations,
            stop_reason: r.stop_reason,
        }
    }
}

pub fn run_trial(master: u64, n: usize, m: usize, trial: usize, cfg: &SolveConfig) -> Result<(ExperimentRecord, SolveReport)> {
    let (inst, w1) = trial_setup(master, n, m, trial)?;
    let report = altmin::solve(&inst, &w1, cfg)?;
    let rec = ExperimentRecord::new(n, m, trial, inst.seed(), &report);
    Ok((rec, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over all trials, successful or not.
    pub median_iterations: f64,
}

pub const PHASE_DIAGRAM_HEADER: &str = "n,m,trials,successes,success_rate,median_iterations";

/// All trials of all cells; records ordered by cell, then trial index.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let solve_cfg = cfg.solve_config();
    let jobs: Vec<(usize, usize, usize)> = cfg
        .cells()?
        .into_iter()
        .flat_map(|(n, m)| (0..cfg.trials_per_cell).map(move |t| (n, m, t)))
        .collect();
    jobs.par_iter()
        .map(|&(n, m, t)| run_trial(cfg.master_seed, n, m, t, &solve_cfg).map(|(rec, _)| rec))
        .collect()
}

pub fn summarize_cells(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for chunk in records.chunk_by(|a, b| (a.n, a.m) == (b.n, b.m)) {
        let successes = chunk.iter().filter(|r| r.success).count();
        let iters: Vec<f64> = chunk.iter().map(|r| r.iterations as f64).collect();
        out.push(CellSummary {
            n: chunk[0].n,
            m: chunk[0].m,
            trials: chunk.len(),
            successes,
            success_rate: successes as f64 / chunk.len() as f64,
            median_iterations: stats::median(&iters).unwrap_or(f64::NAN),
        });
    }
    out
}

pub fn phase_diagram_csv(cells: &[CellSummary]) -> String {
    let mut out = format!("{PHASE_DIAGRAM_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.n, c.m, c.trials, c.successes, c.success_rate, c.median_iterations
        );
    }
    out
}

/// Count of adjacent decreases of `success_rate` in `m` at fixed `n`.
pub fn monotonicity_inversions(cells: &[CellSummary]) -> usize {
    cells
        .chunk_by(|a, b| a.n == b.n)
        .map(|col| col.windows(2).filter(|p| p[1].success_rate < p[0].success_rate).count())
        .sum()
}

pub const TRAJECTORY_HEADER: &str = "k,c0_abs,error";

pub fn trajectory_csv(report: &SolveReport) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for (i, (c, e)) in report.correlation_trace.iter().zip(&report.error_trace).enumerate() {
        let _ = writeln!(out, "{},{c},{e}", i + 1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub record: ExperimentRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsCell {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    /// Index of this cell's first trial in the trace CSV.
    pub first_trial: usize,
    pub depth: usize,
    pub successes: usize,
    pub growth_window: (f64, f64),
    pub growth: Option<QuantileSummary>,
    pub scaled_tail_max: Option<QuantileSummary>,
    pub max_recursion_discrepancy: f64,
    pub min_bound_slack: f64,
    pub max_energy: f64,
    pub saturated_trials: usize,
    pub escape: EscapePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSummary {
    pub config: ExperimentConfig,
    pub basin_c0: f64,
    pub cells: Vec<DynamicsCell>,
    pub escape_regression: dynamics::EscapeRegression,
    pub warnings: Vec<String>,
}

struct TracedTrial {
    record: ExperimentRecord,
    trace: dynamics::CoefficientTrace,
    recursion: dynamics::RecursionReport,
}

/// Number of recursion steps replayed per trace.
const RECURSION_STEPS: usize = 5;

pub fn run_dynamics(cfg: &ExperimentConfig) -> Result<(String, DynamicsSummary)> {
    let solve_cfg = cfg.solve_config();
    let cells = cfg.cells()?;
    let mut csv = format!("{}\n", dynamics::TRACE_CSV_HEADER);
    let mut offset = 0;
    let mut out_cells = Vec::new();
    let mut warnings = Vec::new();
    for (n, m) in cells {
        let depth = dynamics::default_depth(n)?;
        let trials: Vec<TracedTrial> = (0..cfg.trials_per_cell)
            .into_par_iter()
            .map(|t| {
                let (inst, w1) = trial_setup(cfg.master_seed, n, m, t)?;
                let (report, trace) = dynamics::solve_traced(&inst, &w1, &solve_cfg, depth)?;
                let recursion = dynamics::verify_coefficient_recursion(&inst, &trace, RECURSION_STEPS)?;
                Ok(TracedTrial {
                    record: ExperimentRecord::new(n, m, t, inst.seed(), &report),
                    trace,
                    recursion,
                })
            })
            .collect::<Result<_>>()?;
        let mut growth = Vec::new();
        let mut escapes = Vec::new();
        let mut saturated = 0;
        for (t, tr) in trials.iter().enumerate() {
            dynamics::write_trace_rows(&mut csv, offset + t, &tr.trace);
            growth.extend(dynamics::windowed_growth_ratios(tr.trace.correlations(), dynamics::GROWTH_WINDOW));
            if let Some(e) = dynamics::escape_iteration(tr.trace.correlations(), dynamics::BASIN_C0) {
                escapes.push(e as f64);
            }
            if let Some(k) = tr.trace.saturated_at {
                saturated += 1;
                warnings.push(format!("n={n} m={m} trial={t}: basis saturated at k={k}"));
            }
        }
        let traces: Vec<_> = trials.iter().map(|t| t.trace.clone()).collect();
        out_cells.push(DynamicsCell {
            n,
            m,
            trials: trials.len(),
            first_trial: offset,
            depth,
            successes: trials.iter().filter(|t| t.record.success).count(),
            growth_window: dynamics::GROWTH_WINDOW,
            growth: QuantileSummary::from_samples(&growth),
            scaled_tail_max: dynamics::tail_coefficient_stats(&traces, n, m),
            max_recursion_discrepancy: trials.iter().map(|t| t.recursion.max_discrepancy).fold(0.0, f64::max),
            min_bound_slack: trials
                .iter()
                .map(|t| t.recursion.min_bound_slack)
                .fold(f64::INFINITY, f64::min),
            max_energy: trials.iter().map(|t| t.recursion.max_energy).fold(0.0, f64::max),
            saturated_trials: saturated,
            escape: EscapePoint {
                n,
                m,
                trials: trials.len(),
                escaped: escapes.len(),
                median_escape: stats::median(&escapes),
            },
        });
        offset += trials.len();
    }
    let escape_regression = dynamics::escape_regression(out_cells.iter().map(|c| c.escape.clone()).collect());
    Ok((
        csv,
        DynamicsSummary {
            config: cfg.clone(),
            basin_c0: dynamics::BASIN_C0,
            cells: out_cells,
            escape_regression,
            warnings,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationOutput {
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub report: expectations::CertificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckOutput {
    pub config: ExperimentConfig,
    pub results: Vec<probes::ProbeResult>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Short human-readable report for standard output.
    pub stdout: String,
    /// `false` when a check the command performs did not pass.
    pub ok: bool,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Runs `cfg.command` and writes its outputs below `cfg.output_path`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let dir = cfg.output_path.as_path();
    match cfg.command {
        Command::Run => {
            let (n, m) = cfg.cells()?[0];
            let (inst, w1) = trial_setup(cfg.master_seed, n, m, 0)?;
            let solve_cfg = cfg.solve_config();
            let mut files = Vec::new();
            let report = if cfg.instrumentation {
                let depth = dynamics::default_depth(n)?;
                let (report, trace) = dynamics::solve_traced(&inst, &w1, &solve_cfg, depth)?;
                let mut csv = format!("{}\n", dynamics::TRACE_CSV_HEADER);
                dynamics::write_trace_rows(&mut csv, 0, &trace);
                files.push(write_file(dir, "coefficient_trace.csv", &csv)?);
                report
            } else {
                altmin::solve(&inst, &w1, &solve_cfg)?
            };
            let record = ExperimentRecord::new(n, m, 0, inst.seed(), &report);
            files.insert(0, write_file(dir, "trajectory.csv", &trajectory_csv(&report))?);
            let summary = RunSummary {
                config: cfg.clone(),
                record: record.clone(),
            };
            files.push(write_file(dir, "summary.json", &to_json(&summary)?)?);
            Ok(Outcome {
                files,
                stdout: format!(
                    "n={n} m={m} success={} iterations={} final_error={:e} stop={}\n",
                    record.success,
                    record.iterations,
                    record.final_error,
                    record.stop_reason.as_str()
                ),
                ok: true,
            })
        }
        Command::PhaseDiagram => {
            let records = run_grid(cfg)?;
            let cells = summarize_cells(&records);
            let csv = phase_diagram_csv(&cells);
            let files = vec![
                write_file(dir, "phase_diagram.csv", &csv)?,
                write_file(
                    dir,
                    "phase_diagram.json",
                    &to_json(&serde_json::json!({ "config": cfg, "cells": cells }))?,
                )?,
            ];
            Ok(Outcome {
                files,
                stdout: csv,
                ok: true,
            })
        }
        Command::FgCurve => {
            let grid = expectations::uniform_grid(cfg.curve_end, cfg.curve_step);
            let rows = expectations::fg_curve(&grid, cfg.n_samples, rng::derive_seed(cfg.master_seed, &[0]))?;
            let report = expectations::certify_constants(&cfg.certify_config())?;
            let stdout = format!(
                "C_f={} C_g={} min_ratio={} certified_eq1={} certified_eq2={}\n",
                report.c_f, report.c_g, report.min_ratio, report.certified_eq1, report.certified_eq2
            );
            let files = vec![
                write_file(dir, "fg_curve.csv", &expectations::fg_curve_csv(&rows))?,
                write_file(
                    dir,
                    "certification.json",
                    &to_json(&CertificationOutput {
                        config: cfg.clone(),
                        report,
                    })?,
                )?,
            ];
            Ok(Outcome { files, stdout, ok: true })
        }
        Command::LemmaCheck => {
            let results = probes::run_all(&cfg.probes, cfg.master_seed)?;
            let ok = results.iter().all(|r| r.pass);
            let stdout = probes::format_table(&results);
            let files = vec![write_file(
                dir,
                "lemma_check.json",
                &to_json(&LemmaCheckOutput {
                    config: cfg.clone(),
                    results,
                })?,
            )?];
            Ok(Outcome { files, stdout, ok })
        }
        Command::Dynamics => {
            let (csv, summary) = run_dynamics(cfg)?;
            let mut stdout = String::new();
            for c in &summary.cells {
                let q10 = c.growth.map_or(f64::NAN, |g| g.q10);
                let _ = writeln!(
                    stdout,
                    "n={} m={} depth={} growth_q10={q10} median_escape={:?}",
                    c.n, c.m, c.depth, c.escape.median_escape
                );
            }
            let files = vec![
                write_file(dir, "coefficient_trace.csv", &csv)?,
                write_file(dir, "dynamics_summary.json", &to_json(&summary)?)?,
            ];
            Ok(Outcome { files, stdout, ok: true })
        }
    }
}

/// Thread pool sized from [`WORKERS_ENV`] when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let workers: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        if workers == 0 {
            return Err(Error::InvalidConfig(format!("{WORKERS_ENV} must be positive")));
        }
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}
