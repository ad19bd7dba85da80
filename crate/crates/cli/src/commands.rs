//! The four commands. Each writes its artifacts plus `manifest.json` and
//! `timing.json` into the configured output directory.

use std::time::{Duration, Instant};

use maxplus::propagation::{self, SolveOptions, SolveReport};
use maxplus::pruning::{self, PruneConfig, PrunerKind};
use maxplus::residual::{self, ResidualField};
use maxplus::semiconvex;
use maxplus::{MaxPlusApprox, SwitchedSystem};
use serde::Serialize;
use serde_json::json;

use crate::config::{keep_schedule, RunConfig};
use crate::error::CliError;
use crate::output::{num, OutputDir, RunManifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Residual,
    PruneBench,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Residual => "residual",
            Command::PruneBench => "prune-bench",
            Command::Scaling => "scaling",
        }
    }
}

/// Validates `cfg`, runs `cmd` on a pool of `cfg.threads` workers and writes
/// its artifacts.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.threads {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cmd {
        Command::Solve => cmd_solve(cfg),
        Command::Residual => cmd_residual(cfg),
        Command::PruneBench => cmd_prune_bench(cfg),
        Command::Scaling => cmd_scaling(cfg),
    })
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Serialize)]
struct StepTiming {
    step: usize,
    propagation_ms: f64,
    sdp_ms: f64,
    pruning_ms: f64,
}

#[derive(Serialize)]
struct SolveTiming {
    total_ms: f64,
    propagation_pct: f64,
    sdp_pct: f64,
    pruning_pct: f64,
    steps: Vec<StepTiming>,
}

fn solve_timing(report: &SolveReport, total: Duration) -> SolveTiming {
    let sum = |f: fn(&propagation::StepReport) -> Duration| report.steps.iter().map(f).sum::<Duration>();
    let total_ms = ms(total).max(f64::MIN_POSITIVE);
    let pct = |d: Duration| 100.0 * ms(d) / total_ms;
    SolveTiming {
        total_ms: ms(total),
        propagation_pct: pct(sum(|s| s.propagation_time)),
        sdp_pct: pct(sum(|s| s.sdp_time)),
        pruning_pct: pct(sum(|s| s.pruning_time)),
        steps: report
            .steps
            .iter()
            .map(|s| StepTiming {
                step: s.step,
                propagation_ms: ms(s.propagation_time),
                sdp_ms: ms(s.sdp_time),
                pruning_ms: ms(s.pruning_time),
            })
            .collect(),
    }
}

fn solve_options(cfg: &RunConfig, steps: usize, sys: &SwitchedSystem) -> Result<SolveOptions, CliError> {
    let mut pruner = PruneConfig::new(cfg.pruner_kind()?);
    pruner.samples = cfg.samples;
    Ok(SolveOptions {
        tau: cfg.tau,
        steps,
        pruner,
        seed: cfg.seed,
        initial: cfg.initial_approx(sys.dim())?,
    })
}

/// Runs the iteration with the configured schedule.
pub fn run_solver(cfg: &RunConfig, sys: &SwitchedSystem, steps: usize) -> Result<SolveReport, CliError> {
    let schedule = keep_schedule(&cfg.keep, steps)?;
    let opts = solve_options(cfg, steps, sys)?;
    Ok(propagation::solve(sys, &opts, &|i| schedule[i - 1])?)
}

pub fn approx_json(v: &MaxPlusApprox) -> serde_json::Value {
    let forms: Vec<_> = v
        .forms()
        .iter()
        .map(|f| {
            let a = f.a.as_matrix();
            let rows: Vec<Vec<f64>> = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
            let mut entry = json!({ "A": rows, "b": f.b.as_slice(), "c": f.c });
            if let Some(tag) = &f.tag {
                entry["parent"] = json!(tag.parent);
                entry["modes"] = json!(tag.modes);
            }
            entry
        })
        .collect();
    json!({ "dim": v.dim(), "forms": forms })
}

fn steps_table(report: &SolveReport) -> String {
    let mut t = Table::new(&["step", "forms_before", "forms_after", "keep", "sdp_failures"]);
    for s in &report.steps {
        let failures = s.diagnostics.as_ref().map_or(0, |d| d.sdp_failures.len());
        t.row(&[
            s.step.to_string(),
            s.forms_before.to_string(),
            s.forms_after.to_string(),
            s.keep.to_string(),
            failures.to_string(),
        ]);
    }
    t.into_string()
}

fn write_solve(out: &mut OutputDir, report: &SolveReport) -> Result<(), CliError> {
    out.write_json("approx.json", &approx_json(&report.approx))?;
    out.write("steps.csv", &steps_table(report))
}

fn cmd_solve(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let sys = cfg.switched_system()?;
    let t0 = Instant::now();
    let report = run_solver(cfg, &sys, cfg.steps)?;
    let total = t0.elapsed();
    let mut out = OutputDir::create(&cfg.out)?;
    write_solve(&mut out, &report)?;
    out.write_timing(&solve_timing(&report, total))?;
    out.finish(Command::Solve.name(), cfg)
}

pub fn residual_table(field: &ResidualField) -> String {
    let mut t = Table::new(&["x1", "x2", "H", "active", "policy"]);
    for s in &field.samples {
        t.row(&[num(s.x1), num(s.x2), num(s.h), s.active.to_string(), s.policy.to_string()]);
    }
    t.into_string()
}

fn cmd_residual(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let sys = cfg.switched_system()?;
    let slice = cfg.grid_slice()?;
    let t0 = Instant::now();
    let report = run_solver(cfg, &sys, cfg.steps)?;
    let solve_time = t0.elapsed();
    let t1 = Instant::now();
    let field = residual::residual_field(&sys, &report.approx, &slice)?;
    let residual_time = t1.elapsed();

    let mut out = OutputDir::create(&cfg.out)?;
    write_solve(&mut out, &report)?;
    out.write("residual.csv", &residual_table(&field))?;
    out.write_json(
        "residual.json",
        &json!({
            "l1": field.l1,
            "max_abs": field.max_abs,
            "cell_area": slice.cell_area(),
            "points": field.samples.len(),
        }),
    )?;
    let mut timing = serde_json::to_value(solve_timing(&report, solve_time + residual_time))
        .map_err(|e| CliError::Config(e.to_string()))?;
    timing["residual_ms"] = json!(ms(residual_time));
    out.write_timing(&timing)?;
    out.finish(Command::Residual.name(), cfg)
}

/// The set the pruners compete on: every form after `steps` propagations,
/// with the configured pruner applied to all but the last.
pub fn bench_instance(cfg: &RunConfig, sys: &SwitchedSystem) -> Result<MaxPlusApprox, CliError> {
    let props = propagation::build_propagators(sys, cfg.tau)?;
    let before = if cfg.steps == 1 {
        cfg.initial_approx(sys.dim())?
            .unwrap_or_else(|| MaxPlusApprox::single(maxplus::QuadraticForm::zero(sys.dim())))
    } else {
        run_solver(cfg, sys, cfg.steps - 1)?.approx
    };
    Ok(propagation::step(&before, &props)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: PrunerKind,
    pub cost: f64,
    pub max_loss: f64,
    pub kept: Vec<usize>,
}

fn cmd_prune_bench(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let sys = cfg.switched_system()?;
    let v = bench_instance(cfg, &sys)?;
    let k = cfg.prune_bench.k;
    if k >= v.len() {
        return Err(CliError::Config(format!(
            "prune_bench.k: {k} must be below the instance size {}",
            v.len()
        )));
    }
    let seed = cfg.seed;
    let prune_with = |kind: PrunerKind| {
        let mut pc = PruneConfig::new(kind);
        pc.samples = cfg.samples;
        let t = Instant::now();
        pruning::prune(&v, k, &pc, seed).map(|o| (o, t.elapsed()))
    };

    let mut outcomes = Vec::new();
    for kind in cfg.bench_methods()? {
        outcomes.push((kind, prune_with(kind)?));
    }
    // Every method sees the same pool for a given seed; score them all on it.
    let witnesses = match outcomes.iter().find(|(_, (o, _))| !o.result.diagnostics.witnesses.is_empty()) {
        Some((_, (o, _))) => o.result.diagnostics.witnesses.clone(),
        None => prune_with(PrunerKind::SortLower)?.0.result.diagnostics.witnesses,
    };
    if witnesses.is_empty() {
        return Err(maxplus::Error::EmptyWitnesses.into());
    }

    let mut table = Table::new(&["method", "cost", "max_loss", "kept"]);
    let mut timing = Vec::new();
    for (kind, (outcome, wall)) in &outcomes {
        let kept = &outcome.result.kept;
        let cost = pruning::kmedian_cost(&v, &witnesses, kept)?;
        let max_loss = pruning::kcenter_cost(&v, &witnesses, kept)?;
        let kept_text: Vec<String> = kept.iter().map(|i| i.to_string()).collect();
        table.row(&[kind.name().to_string(), num(cost), num(max_loss), kept_text.join(" ")]);
        timing.push(json!({
            "method": kind.name(),
            "wall_ms": ms(*wall),
            "sdp_ms": ms(outcome.sdp_time),
            "pruning_ms": ms(outcome.combinatorial_time),
        }));
    }

    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("instance.json", &approx_json(&v))?;
    out.write("prune_bench.csv", &table.into_string())?;
    out.write_timing(&json!({ "methods": timing }))?;
    out.finish(Command::PruneBench.name(), cfg)
}

/// Reads `prune_bench.csv` text back into rows.
pub fn parse_bench_table(text: &str) -> Result<Vec<BenchRow>, CliError> {
    let bad = |line: &str| CliError::Config(format!("malformed prune-bench row '{line}'"));
    text.lines()
        .skip(1)
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(bad(line));
            }
            Ok(BenchRow {
                method: cells[0].parse().map_err(|_| bad(line))?,
                cost: cells[1].parse().map_err(|_| bad(line))?,
                max_loss: cells[2].parse().map_err(|_| bad(line))?,
                kept: cells[3]
                    .split_whitespace()
                    .map(|i| i.parse().map_err(|_| bad(line)))
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

fn cmd_scaling(cfg: &RunConfig) -> Result<RunManifest, CliError> {
    let (psi, domain, placement) = cfg.scaling_setup()?;
    let s = &cfg.scaling;
    let t0 = Instant::now();
    let report = semiconvex::scaling_experiment(psi, s.c, &domain, &s.n, placement, s.grid_res)?;
    let total = t0.elapsed();

    let mut table = Table::new(&["n", "eps1", "epsInf"]);
    for r in &report.rows {
        table.row(&[r.n.to_string(), num(r.eps1), num(r.eps_inf)]);
    }
    let mut out = OutputDir::create(&cfg.out)?;
    out.write("scaling.csv", &table.into_string())?;
    out.write_json(
        "scaling.json",
        &json!({
            "function": psi.name(),
            "c": s.c,
            "d": s.d,
            "placement": placement.name(),
            "slope_inf": report.slope_inf,
            "slope_1": report.slope_1,
            "hessian_factor": report.hessian_factor,
        }),
    )?;
    out.write_timing(&json!({ "total_ms": ms(total) }))?;
    out.finish(Command::Scaling.name(), cfg)
}
