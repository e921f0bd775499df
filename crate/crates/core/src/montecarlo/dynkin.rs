//! Monte Carlo check of Dynkin's formula
//! `E f(T, S_T) − f(0, s0) = E ∫₀ᵀ (∂_t f + 𝓛^u f)(t, S_t) dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::drive;
use super::{in_pool, EnsembleConfig, EnsembleSummary};
use crate::bellman::ValueFunction;
use crate::error::{Error, Result};
use crate::strategies::{Horizon, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynkinReport {
    /// Mean of the per-trajectory differences of the two sides.
    pub residual: EnsembleSummary,
    /// `E f(T, S_T) − f(0, s0)`.
    pub lhs: f64,
    /// `E ∫ (∂_t f + 𝓛^u f) dt`, left-point rule along each path.
    pub rhs: f64,
    /// Leading discretisation bias `E Σ ½|∂²_s f| a² Δt²` of the Euler step.
    pub bias_bound: f64,
    /// `|residual| ≤ 3·stderr + bias_bound`, up to rounding.
    pub consistent: bool,
}

/// Evaluates both sides of Dynkin's formula on the same trajectories.
///
/// The test function is any [`ValueFunction`]; polynomials cover `f = s`
/// and `f = s²`.
pub fn dynkin_check(f: &ValueFunction, strategy: &Strategy, cfg: &EnsembleConfig) -> Result<DynkinReport> {
    cfg.validate()?;
    let Horizon::Terminal(horizon) = cfg.horizon else {
        return Err(Error::Config("Dynkin check needs a terminal time".into()));
    };
    let stop = cfg.stop()?;
    let f0 = f.value(0.0, cfg.s0)?;
    let rows: Vec<(f64, f64, f64)> = in_pool(cfg.workers, || {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| {
                let (mut integral, mut bias) = (0.0, 0.0);
                let o = drive(strategy, cfg, i as u64, stop, |st| {
                    let d = f.derivatives(st.t, st.s)?;
                    let gen = crate::bellman::generator_from(&d, st.s, st.v);
                    integral += (d.vt + gen) * st.dt;
                    let a = st.drift();
                    bias += 0.5 * d.vss.abs() * a * a * st.dt * st.dt;
                    Ok(())
                })?;
                let lhs = f.value(horizon, o.s)? - f0;
                Ok((lhs, integral, bias))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let n = rows.len() as f64;
    let diffs: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let residual = EnsembleSummary::from_samples(&diffs, 0);
    let lhs = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let rhs = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let bias_bound = rows.iter().map(|r| r.2).sum::<f64>() / n;
    let rounding = 1e-12 * (1.0 + lhs.abs() + rhs.abs());
    let consistent = residual.estimate.abs() <= 3.0 * residual.stderr + bias_bound + rounding;
    Ok(DynkinReport {
        residual,
        lhs,
        rhs,
        bias_bound,
        consistent,
    })
}
