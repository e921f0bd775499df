//! Command dispatch and on-disk artifacts.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use super::config::{Command, Problem, RunConfig};
use crate::bellman::{
    verify_finite_horizon, verify_hitting_time, FiniteHorizonGrid, HittingTimeGrid, ValueFunction,
    VerificationReport,
};
use crate::dp::{refine_and_extrapolate, solve_finite_horizon, solve_hitting_time, DpProblem, ValueGrid};
use crate::error::{Error, Result};
use crate::montecarlo::{
    compare_strategies, cross_validate, in_pool, passage_times, run_ensemble, simulate_trajectory,
    singular_limit_probe, EnsembleConfig, Goal, ProbeGoal,
};
use crate::strategies::{
    jacobs_expected_cost, jacobs_hitting_time, min_time_hitting_time, Horizon, PolicyTable, Strategy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_FILESYSTEM: i32 = 3;

/// Cross-validation passes when the discrepancy is at most this many steps.
const CROSSVAL_STEPS: f64 = 10.0;
/// ...and halving the step shrinks it at least this much.
const CROSSVAL_HALVING: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub code: i32,
    pub result: Value,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_FILESYSTEM,
        Error::Csv(c) if c.is_io_error() => EXIT_FILESYSTEM,
        _ => EXIT_DOMAIN,
    }
}

fn ensemble(cfg: &RunConfig, horizon: Horizon) -> EnsembleConfig {
    EnsembleConfig {
        n_traj: cfg.n,
        s0: cfg.s0,
        dt: cfg.dt,
        scheme: cfg.scheme,
        seed: cfg.seed,
        horizon,
        cutoff: cfg.cutoff,
        crossing: cfg.crossing,
        theta0: cfg.theta0,
        // the whole command already runs inside the configured pool
        workers: None,
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

/// Runs `cfg.command`, writing `config.txt`, `result.json`, `manifest.json`
/// and any command-specific CSV files into `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.echo())?;

    let workers = (cfg.workers > 0).then_some(cfg.workers);
    let mut files = vec!["config.txt".to_string(), "result.json".to_string()];
    let (code, result) = in_pool(workers, || dispatch(cfg, &mut files))??;

    write_json(&cfg.out.join("result.json"), &result)?;
    let config: serde_json::Map<String, Value> =
        cfg.echo_pairs().into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    files.push("manifest.json".into());
    let manifest = json!({
        "program": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.as_str(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "started_unix": started,
        "wall_time_s": clock.elapsed().as_secs_f64(),
        "exit_code": code,
        "config": config,
        "outputs": files,
    });
    write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { code, result })
}

fn dispatch(cfg: &RunConfig, files: &mut Vec<String>) -> Result<(i32, Value)> {
    match cfg.command {
        Command::Simulate => simulate(cfg, files),
        Command::Hit => hit(cfg, files),
        Command::Verify => verify(cfg),
        Command::Solve => solve(cfg, files),
        Command::Compare => compare(cfg),
        Command::Crossval => crossval(cfg),
        Command::Probe => probe(cfg),
    }
}

fn simulate(cfg: &RunConfig, files: &mut Vec<String>) -> Result<(i32, Value)> {
    let strategy = cfg.strategy.build()?;
    let ec = ensemble(cfg, Horizon::Terminal(cfg.horizon));
    let summary = run_ensemble(&strategy, cfg.cost, &ec)?;
    let analytic = match strategy {
        Strategy::Jacobs => Some(jacobs_expected_cost(cfg.s0, cfg.horizon, cfg.cost)?),
        _ => None,
    };
    for i in 0..cfg.dump.min(cfg.n) {
        let rec = simulate_trajectory(&strategy, &ec, i as u64)?;
        let name = format!("trajectory_{i}.csv");
        rec.write_csv(BufWriter::new(fs::File::create(cfg.out.join(&name))?))?;
        files.push(name);
    }
    Ok((
        EXIT_OK,
        json!({
            "strategy": strategy.name(),
            "cost": cfg.cost.name(),
            "summary": summary,
            "analytic": analytic,
        }),
    ))
}

fn hit(cfg: &RunConfig, files: &mut Vec<String>) -> Result<(i32, Value)> {
    let strategy = cfg.strategy.build()?;
    let ec = ensemble(cfg, Horizon::Threshold(cfg.threshold));
    let sample = passage_times(&strategy, &ec)?;
    sample.write_histogram(cfg.bins, BufWriter::new(fs::File::create(cfg.out.join("histogram.csv"))?))?;
    files.push("histogram.csv".into());
    sample.check_censoring()?;
    let analytic = match strategy {
        Strategy::MinTime => Some(min_time_hitting_time(cfg.s0, cfg.threshold)?),
        Strategy::Jacobs => Some(jacobs_hitting_time(cfg.s0, cfg.threshold)?),
        _ => None,
    };
    for i in 0..cfg.dump.min(cfg.n) {
        let rec = simulate_trajectory(&strategy, &ec, i as u64)?;
        let name = format!("trajectory_{i}.csv");
        rec.write_csv(BufWriter::new(fs::File::create(cfg.out.join(&name))?))?;
        files.push(name);
    }
    Ok((
        EXIT_OK,
        json!({
            "strategy": strategy.name(),
            "threshold": cfg.threshold,
            "cutoff": sample.cutoff,
            "summary": sample.summary(),
            "analytic": analytic,
        }),
    ))
}

fn solved_grid(cfg: &RunConfig) -> Result<ValueGrid> {
    match cfg.problem {
        Problem::Finite => solve_finite_horizon(cfg.cost, cfg.horizon, cfg.n_s, cfg.n_t, cfg.substeps),
        Problem::Hitting => solve_hitting_time(cfg.threshold, cfg.n_s),
    }
}

/// Tabulates the solved policy. Ties, and nodes at or below `floor`, take the
/// decision of the nearest decided node.
fn grid_policy(grid: &ValueGrid, floor: Option<f64>) -> Result<PolicyTable> {
    let times = grid.t_grid.clone().unwrap_or_else(|| vec![0.0]);
    let values = grid
        .policy
        .iter()
        .zip(&grid.ties)
        .map(|(row, ties)| {
            let decided: Vec<usize> = (0..row.len())
                .filter(|&i| !ties[i] && floor.is_none_or(|h| grid.s_grid[i] > h))
                .collect();
            (0..row.len())
                .map(|i| {
                    let j = decided.iter().copied().min_by_key(|&j| j.abs_diff(i)).unwrap_or(i);
                    f64::from(row[j])
                })
                .collect()
        })
        .collect();
    PolicyTable::new(times, grid.s_grid.clone(), values)
}

fn verify(cfg: &RunConfig) -> Result<(i32, Value)> {
    let (mut vf, default_strategy) = match cfg.value.as_str() {
        "jacobs" => (ValueFunction::analytic_jacobs(cfg.cost, cfg.horizon)?, Strategy::Jacobs),
        "mintime" => (ValueFunction::analytic_min_time(cfg.threshold)?, Strategy::MinTime),
        "zero" => (ValueFunction::zero(), Strategy::Jacobs),
        _ => {
            let grid = solved_grid(cfg)?;
            let floor = matches!(cfg.problem, Problem::Hitting).then_some(cfg.threshold);
            let table = grid_policy(&grid, floor)?;
            (ValueFunction::Grid(Box::new(grid)), Strategy::Tabulated(table))
        }
    };
    if cfg.scale != 1.0 {
        vf = vf.scaled(cfg.scale);
    }
    let strategy = if cfg.strategy.0 == "auto" {
        default_strategy
    } else {
        cfg.strategy.build()?
    };
    let report: VerificationReport = match cfg.problem {
        Problem::Finite => verify_finite_horizon(
            &vf,
            &strategy,
            cfg.cost,
            &FiniteHorizonGrid::new(cfg.horizon, cfg.grid_t, cfg.grid_s),
            cfg.tol,
        )?,
        Problem::Hitting => verify_hitting_time(
            &vf,
            &strategy,
            cfg.threshold,
            &HittingTimeGrid::new(cfg.threshold, cfg.grid_s),
            cfg.tol,
        )?,
    };
    let code = if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((
        code,
        json!({
            "value": cfg.value,
            "strategy": strategy.name(),
            "passed": report.passed(),
            "report": report,
        }),
    ))
}

fn solve(cfg: &RunConfig, files: &mut Vec<String>) -> Result<(i32, Value)> {
    let grid = solved_grid(cfg)?;
    grid.write_files(&cfg.out, "value")?;
    files.extend(["value.csv".to_string(), "value.json".to_string()]);
    let (reference, expected, problem) = match cfg.problem {
        Problem::Finite => (
            ValueFunction::analytic_jacobs(cfg.cost, cfg.horizon)?,
            0u8,
            DpProblem::FiniteHorizon {
                cost: cfg.cost,
                horizon: cfg.horizon,
                n_t: cfg.n_t,
            },
        ),
        Problem::Hitting => (
            ValueFunction::analytic_min_time(cfg.threshold)?,
            1u8,
            DpProblem::HittingTime {
                threshold: cfg.threshold,
            },
        ),
    };
    let convergence = if cfg.refine.is_empty() {
        None
    } else {
        Some(refine_and_extrapolate(problem, &cfg.refine)?)
    };
    Ok((
        EXIT_OK,
        json!({
            "info": grid.info,
            "sup_error_vs_closed_form": grid.sup_error(&reference)?,
            "policy_mismatches": grid.policy_mismatches(expected),
            "expected_policy": expected,
            "convergence": convergence,
        }),
    ))
}

fn compare(cfg: &RunConfig) -> Result<(i32, Value)> {
    let strategies = cfg.strategies.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
    let goal = match cfg.goal {
        Problem::Finite => Goal::ExpectedCost {
            cost: cfg.cost,
            horizon: cfg.horizon,
        },
        Problem::Hitting => Goal::MeanHittingTime {
            threshold: cfg.threshold,
        },
    };
    let ec = ensemble(cfg, Horizon::Terminal(cfg.horizon));
    let report = compare_strategies(&strategies, goal, &ec)?;
    Ok((EXIT_OK, serde_json::to_value(report)?))
}

fn crossval(cfg: &RunConfig) -> Result<(i32, Value)> {
    let strategy = cfg.strategy.build()?;
    let report = cross_validate(&strategy, &ensemble(cfg, Horizon::Terminal(cfg.horizon)), cfg.mode)?;
    let pass = report.max_discrepancy <= CROSSVAL_STEPS * cfg.dt && report.halving_ratio <= CROSSVAL_HALVING;
    let code = if pass { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((
        code,
        json!({
            "passed": pass,
            "bound": CROSSVAL_STEPS * cfg.dt,
            "max_halving_ratio": CROSSVAL_HALVING,
            "report": report,
        }),
    ))
}

fn probe(cfg: &RunConfig) -> Result<(i32, Value)> {
    let target = cfg.strategy.build()?;
    let (goal, horizon) = match cfg.goal {
        Problem::Finite => (ProbeGoal::TerminalEntropy { horizon: cfg.horizon }, Horizon::Terminal(cfg.horizon)),
        Problem::Hitting => (
            ProbeGoal::MeanHittingTime {
                threshold: cfg.threshold,
            },
            Horizon::Threshold(cfg.threshold),
        ),
    };
    let table = singular_limit_probe(&cfg.gains, &target, goal, &ensemble(cfg, horizon))?;
    Ok((EXIT_OK, serde_json::to_value(table)?))
}
