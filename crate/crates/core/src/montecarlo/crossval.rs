//! Agreement between the density-matrix, Bloch and entropy integrators, and
//! the approach of finite rotation rates to direct angle control.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_hitting_time, in_pool, run_ensemble, EnsembleConfig, EnsembleSummary};
use crate::error::{Error, Result};
use crate::sde::{
    advance_s, bloch_from_entropy, rotate_to_angle, singular_step_bloch, singular_step_rho, step_bloch,
    step_rho, BrownianPath, NoiseStream, PositivityRepair, StepConfig,
};
use crate::strategies::{jacobs_entropy, min_time_hitting_time, Horizon, Strategy, TerminalCost};

/// How the Bloch and density-matrix routes hold the angle at its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RotationMode {
    /// Rotate back to the target once before every step. The tangential
    /// noise then leaves an `O(√dt)` residue whenever `|u| < 1`.
    PerStep,
    /// Step the radius along the target ray, the exact singular-limit
    /// dynamics.
    #[default]
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub strategy: String,
    pub mode: RotationMode,
    pub dt: f64,
    pub paths: usize,
    /// Largest `|S_Bloch − S|` over all steps and paths at `dt`.
    pub bloch: f64,
    /// Largest `|S_ρ − S|` over all steps and paths at `dt`.
    pub rho: f64,
    pub max_discrepancy: f64,
    /// Same Brownian paths observed at `dt/2`.
    pub max_discrepancy_half: f64,
    /// `max_discrepancy_half / max_discrepancy`.
    pub halving_ratio: f64,
    pub positivity_repairs: usize,
}

struct PathResult {
    bloch: f64,
    rho: f64,
    repairs: usize,
}

fn compare_path(
    strategy: &Strategy,
    theta: f64,
    s0: f64,
    path: &BrownianPath,
    step: &StepConfig,
    mode: RotationMode,
) -> Result<PathResult> {
    let mut s = s0;
    let mut b = bloch_from_entropy(s0, theta)?;
    let mut rho = b.to_density();
    let mut out = PathResult {
        bloch: 0.0,
        rho: 0.0,
        repairs: 0,
    };
    for (k, &dw) in path.increments.iter().enumerate() {
        let v = strategy.evaluate(k as f64 * path.dt, s).get();
        s = advance_s(s, v, dw, path.dt, step.scheme);
        match mode {
            RotationMode::PerStep => {
                b = step_bloch(&rotate_to_angle(&b, theta)?, 0.0, dw, step)?;
                let turned = rotate_to_angle(&rho.to_bloch(), theta)?.to_density();
                let (next, repair) = step_rho(&turned, 0.0, dw, step)?;
                rho = next;
                out.repairs += usize::from(repair == PositivityRepair::EigenvalueClipped);
            }
            RotationMode::Continuous => {
                b = singular_step_bloch(&b, theta, dw, step)?;
                rho = singular_step_rho(&rho, theta, dw, step)?;
            }
        }
        out.bloch = out.bloch.max((b.entropy() - s).abs());
        out.rho = out.rho.max((rho.entropy() - s).abs());
    }
    Ok(out)
}

/// Integrates the three representations on shared Brownian paths and reports
/// the largest entropy discrepancy, at `dt` and at `dt/2`.
///
/// `cfg.n_traj` paths are used; `cfg.horizon` must be a terminal time.
pub fn cross_validate(strategy: &Strategy, cfg: &EnsembleConfig, mode: RotationMode) -> Result<CrossValidationReport> {
    cfg.validate()?;
    let theta = strategy
        .target_angle()
        .ok_or_else(|| Error::Config(format!("strategy {} has no fixed target angle", strategy.name())))?;
    let Horizon::Terminal(horizon) = cfg.horizon else {
        return Err(Error::Config("cross-validation needs a terminal time".into()));
    };
    let steps = (horizon / cfg.dt).round() as usize;
    let coarse_cfg = StepConfig::new(cfg.dt, cfg.scheme)?;
    let fine_cfg = coarse_cfg.with_dt(cfg.dt / 2.0)?;

    let rows: Vec<(PathResult, PathResult)> = in_pool(cfg.workers, || {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| {
                let mut stream = NoiseStream::new(cfg.seed, i as u64);
                let fine = BrownianPath::sample(&mut stream, cfg.dt / 2.0, 2 * steps);
                let coarse = fine.coarsen(2);
                Ok((
                    compare_path(strategy, theta, cfg.s0, &coarse, &coarse_cfg, mode)?,
                    compare_path(strategy, theta, cfg.s0, &fine, &fine_cfg, mode)?,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let fold = |f: &dyn Fn(&(PathResult, PathResult)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let bloch = fold(&|r| r.0.bloch);
    let rho = fold(&|r| r.0.rho);
    let max_discrepancy = bloch.max(rho);
    let max_discrepancy_half = fold(&|r| r.1.bloch.max(r.1.rho));
    Ok(CrossValidationReport {
        strategy: strategy.name(),
        mode,
        dt: cfg.dt,
        paths: cfg.n_traj,
        bloch,
        rho,
        max_discrepancy,
        max_discrepancy_half,
        halving_ratio: max_discrepancy_half / max_discrepancy,
        positivity_repairs: rows.iter().map(|r| r.0.repairs + r.1.repairs).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProbeGoal {
    TerminalEntropy { horizon: f64 },
    MeanHittingTime { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub gain: f64,
    pub summary: EnsembleSummary,
    /// `|finite-gain estimate − direct-control estimate|`.
    pub distance: f64,
    /// Distance to the closed form, when the target has one.
    pub distance_analytic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub target: String,
    pub goal: ProbeGoal,
    pub direct: EnsembleSummary,
    pub analytic: Option<f64>,
    pub rows: Vec<ProbeRow>,
    /// Each distance is at most the previous one plus both 95% half-widths.
    pub decreasing_within_ci: bool,
}

/// Simulates `Ω = gain·(θ_target − θ)` on the Bloch vector for each gain and
/// compares with holding `u = cos θ_target` directly. No rate is asserted.
pub fn singular_limit_probe(gains: &[f64], target: &Strategy, goal: ProbeGoal, cfg: &EnsembleConfig) -> Result<ProbeTable> {
    if gains.is_empty() {
        return Err(Error::Config("probe needs at least one gain".into()));
    }
    if gains.windows(2).any(|w| w[1] <= w[0]) || gains[0] < 0.0 {
        return Err(Error::Config("gains must be non-negative and increasing".into()));
    }
    let theta_target = target
        .target_angle()
        .ok_or_else(|| Error::Config(format!("strategy {} has no fixed target angle", target.name())))?;
    let mut run = *cfg;
    let statistic = |strategy: &Strategy, run: &EnsembleConfig| -> Result<EnsembleSummary> {
        match goal {
            ProbeGoal::TerminalEntropy { .. } => run_ensemble(strategy, TerminalCost::LinearEntropy, run),
            ProbeGoal::MeanHittingTime { .. } => estimate_hitting_time(strategy, run),
        }
    };
    let analytic = match (goal, target) {
        (ProbeGoal::TerminalEntropy { horizon }, Strategy::Jacobs) => Some(jacobs_entropy(cfg.s0, horizon)?),
        (ProbeGoal::MeanHittingTime { threshold }, Strategy::MinTime) => {
            Some(min_time_hitting_time(cfg.s0, threshold)?)
        }
        _ => None,
    };
    run.horizon = match goal {
        ProbeGoal::TerminalEntropy { horizon } => Horizon::Terminal(horizon),
        ProbeGoal::MeanHittingTime { threshold } => Horizon::Threshold(threshold),
    };
    let direct = statistic(target, &run)?;

    let mut rows: Vec<ProbeRow> = Vec::with_capacity(gains.len());
    for &gain in gains {
        let summary = statistic(&Strategy::FiniteOmega { gain, theta_target }, &run)?;
        rows.push(ProbeRow {
            gain,
            distance: (summary.estimate - direct.estimate).abs(),
            distance_analytic: analytic.map(|a| (summary.estimate - a).abs()),
            summary,
        });
    }
    let decreasing_within_ci = rows
        .windows(2)
        .all(|w| w[1].distance <= w[0].distance + w[0].summary.ci95 + w[1].summary.ci95);
    Ok(ProbeTable {
        target: target.name(),
        goal,
        direct,
        analytic,
        rows,
        decreasing_within_ci,
    })
}
