//! Explicit finite-difference solvers for the two Bellman equations.
//!
//! Both solvers march in reversed time `τ = T − t` (or pseudo-time for the
//! stationary problem):
//!
//! ```text
//! ∂_τ V = −4s ∂_s V + min{0, 𝒟V}          (+ 1 for the hitting-time cost)
//! ```
//!
//! The transport term uses backward differences, which is the upwind side
//! since information moves toward larger `s` as `τ` grows. `𝒟V` uses central
//! differences in the interior and one-sided ones at `s = 1`, where it
//! vanishes anyway. No boundary condition is imposed at `s = 1`.
//!
//! The solvers know nothing of the closed forms.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellman::{Derivatives, ValueFunction};
use crate::error::{Error, Result};
use crate::strategies::{check_threshold, TerminalCost};

/// Slices with fewer nodes than this are swept on the calling thread.
const PAR_MIN_NODES: usize = 4096;

/// Default cap on pseudo-time iterations for the stationary problem.
pub const MAX_ITERATIONS: usize = 50_000_000;

/// Stationary iteration stops once the largest nodal update is below this
/// and the largest Bellman residual (update over step) is below
/// [`RESIDUAL_TOL`].
pub const CONVERGENCE_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-7;

/// Fraction of the stability limit used for pseudo-time steps.
const SAFETY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DpProblem {
    FiniteHorizon {
        cost: TerminalCost,
        horizon: f64,
        n_t: usize,
    },
    HittingTime {
        threshold: f64,
    },
}

/// Solver diagnostics written to the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpInfo {
    pub problem: DpProblem,
    pub n_s: usize,
    pub ds: f64,
    pub dtau: f64,
    /// Explicit steps taken (finite horizon) or pseudo-time iterations.
    pub steps: usize,
    pub stability_bound: f64,
    pub final_update: f64,
    /// Largest `|ΔV|/Δτ` on the last pseudo-time step; `0` for the
    /// finite-horizon sweep.
    pub final_residual: f64,
    pub tie_tol: f64,
    pub ties: usize,
    /// Consecutive nodes ending at `s = 1` with irregular curvature.
    pub boundary_layer_nodes: usize,
    pub boundary_layer_flagged: bool,
}

/// A solved value function on a uniform `s` grid, with an optional uniform
/// `t` grid. Stationary solutions carry a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    pub s_grid: Vec<f64>,
    pub t_grid: Option<Vec<f64>>,
    /// `values[k][i]` at `(t_k, s_i)`.
    pub values: Vec<Vec<f64>>,
    /// `0` or `1`; ties are stored as `0` and marked in `ties`.
    pub policy: Vec<Vec<u8>>,
    pub ties: Vec<Vec<bool>>,
    pub info: DpInfo,
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// Largest stable explicit step: every nodal update must be a convex
/// combination of its neighbours under either control.
pub fn stability_bound(s_grid: &[f64]) -> f64 {
    let ds = s_grid[1] - s_grid[0];
    let rate = s_grid
        .iter()
        .map(|&s| 4.0 * s / ds + 16.0 * s * s * (1.0 - s) / (ds * ds))
        .fold(0.0f64, f64::max);
    1.0 / rate
}

/// `(upwind ∂_s V, 𝒟V)` at node `i`.
#[inline]
fn discrete_ops(v: &[f64], s: f64, i: usize, ds: f64) -> (f64, f64) {
    let n = v.len();
    let back = (v[i] - v[i - 1]) / ds;
    let d = if i + 1 < n {
        let vs = (v[i + 1] - v[i - 1]) / (2.0 * ds);
        let vss = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (ds * ds);
        4.0 * s * (1.0 - s) * vs + 8.0 * s * s * (1.0 - s) * vss
    } else {
        // 1 − s = 0 at the right end
        let vs = back;
        let vss = if i >= 2 {
            (v[i] - 2.0 * v[i - 1] + v[i - 2]) / (ds * ds)
        } else {
            0.0
        };
        4.0 * s * (1.0 - s) * vs + 8.0 * s * s * (1.0 - s) * vss
    };
    (back, d)
}

/// Per-node stencil weights, scaled by the node's step size.
struct Stencil {
    /// `Δτ_i · 4s_i/Δs`
    transport: Vec<f64>,
    /// `Δτ_i · 4s_i(1−s_i)/(2Δs)`
    first: Vec<f64>,
    /// `Δτ_i · 8s_i²(1−s_i)/Δs²`
    second: Vec<f64>,
    dtau: Vec<f64>,
}

impl Stencil {
    fn new(s_grid: &[f64], ds: f64, dtau: impl Fn(f64) -> f64) -> Self {
        let n = s_grid.len();
        let mut st = Stencil {
            transport: Vec::with_capacity(n),
            first: Vec::with_capacity(n),
            second: Vec::with_capacity(n),
            dtau: Vec::with_capacity(n),
        };
        for &s in s_grid {
            let dt = dtau(s);
            st.transport.push(dt * 4.0 * s / ds);
            st.first.push(dt * 4.0 * s * (1.0 - s) / (2.0 * ds));
            st.second.push(dt * 8.0 * s * s * (1.0 - s) / (ds * ds));
            st.dtau.push(dt);
        }
        st
    }

    /// Update at interior node `i` given its neighbours.
    #[inline]
    fn interior(&self, i: usize, left: f64, mid: f64, right: f64, source: f64) -> f64 {
        let d = self.first[i] * (right - left) + self.second[i] * (right - 2.0 * mid + left);
        mid + self.dtau[i] * source - self.transport[i] * (mid - left) + d.min(0.0)
    }

    /// One explicit step on nodes `1..n`; node `0` is held fixed. The last
    /// node has `1 − s = 0`, so only transport acts there.
    fn sweep(&self, v: &[f64], source: f64, out: &mut [f64]) {
        let n = v.len();
        out[0] = v[0];
        let interior = |(k, o): (usize, &mut f64)| {
            let i = k + 1;
            *o = self.interior(i, v[i - 1], v[i], v[i + 1], source);
        };
        if n >= PAR_MIN_NODES {
            out[1..n - 1].par_iter_mut().enumerate().for_each(interior);
        } else {
            out[1..n - 1].iter_mut().enumerate().for_each(interior);
        }
        let last = n - 1;
        out[last] = v[last] + self.dtau[last] * source - self.transport[last] * (v[last] - v[last - 1]);
    }
}

fn extract_policy(v: &[f64], s_grid: &[f64], ds: f64, tie_tol: f64) -> (Vec<u8>, Vec<bool>) {
    let n = v.len();
    let mut policy = vec![0u8; n];
    let mut ties = vec![false; n];
    for i in 1..n {
        let (_, d) = discrete_ops(v, s_grid[i], i, ds);
        if d.abs() <= tie_tol {
            ties[i] = true;
        } else if d < 0.0 {
            policy[i] = 1;
        }
    }
    (policy, ties)
}

/// Counts the run of nodes ending at `s = 1` whose second difference exceeds
/// ten times the interior median.
fn boundary_layer(v: &[f64]) -> usize {
    let n = v.len();
    if n < 5 {
        return 0;
    }
    let d2: Vec<f64> = (1..n - 1)
        .map(|i| (v[i + 1] - 2.0 * v[i] + v[i - 1]).abs())
        .collect();
    let mut sorted = d2.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    d2.iter()
        .rev()
        .take_while(|&&x| x > 10.0 * median + 1e-14)
        .count()
}

/// Solves `V_t − 4s V_s + min{0, 𝒟V} = 0`, `V(T, s) = F(s)` on `n_s` nodes over
/// `[0, 1]`, storing `n_t` uniform time slices.
///
/// The number of explicit steps between stored slices is chosen from the
/// stability bound unless `substeps` is given, in which case a value that is
/// too small is refused.
pub fn solve_finite_horizon(
    cost: TerminalCost,
    horizon: f64,
    n_s: usize,
    n_t: usize,
    substeps: Option<usize>,
) -> Result<ValueGrid> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::domain("T", horizon, "[0, inf)"));
    }
    if n_s < 3 || n_t < 2 {
        return Err(Error::GridTooCoarse(format!(
            "need n_s >= 3 and n_t >= 2, got n_s = {n_s}, n_t = {n_t}"
        )));
    }
    let s_grid = uniform(0.0, 1.0, n_s);
    let ds = s_grid[1];
    let t_grid = uniform(0.0, horizon, n_t);
    let bound = stability_bound(&s_grid);
    let intervals = n_t - 1;
    let required = (horizon / (bound * intervals as f64)).ceil().max(1.0) as usize;
    let m = match substeps {
        Some(m) if m < required => {
            return Err(Error::Unstable {
                steps: m * intervals,
                required: required * intervals,
            })
        }
        Some(m) => m,
        None => required,
    };
    let dtau = horizon / (m * intervals) as f64;
    let tie_tol = 10.0 * ds * ds;

    let stencil = Stencil::new(&s_grid, ds, |_| dtau);
    let terminal: Vec<f64> = s_grid.iter().map(|&s| cost.eval(s)).collect();
    let mut slices = vec![terminal.clone()];
    let mut cur = terminal;
    let mut next = vec![0.0; n_s];
    let mut final_update = 0.0;
    if horizon > 0.0 {
        for _ in 0..intervals {
            for _ in 0..m {
                stencil.sweep(&cur, 0.0, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            slices.push(cur.clone());
        }
        final_update = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    } else {
        for _ in 0..intervals {
            slices.push(cur.clone());
        }
    }
    // slices were built in reversed time
    slices.reverse();

    let mut policy = Vec::with_capacity(n_t);
    let mut ties = Vec::with_capacity(n_t);
    for v in &slices {
        let (p, t) = extract_policy(v, &s_grid, ds, tie_tol);
        policy.push(p);
        ties.push(t);
    }
    let tie_count = ties.iter().flatten().filter(|&&x| x).count();
    let layer = boundary_layer(&slices[0]);
    Ok(ValueGrid {
        info: DpInfo {
            problem: DpProblem::FiniteHorizon { cost, horizon, n_t },
            n_s,
            ds,
            dtau,
            steps: if horizon > 0.0 { m * intervals } else { 0 },
            stability_bound: bound,
            final_update,
            final_residual: 0.0,
            tie_tol,
            ties: tie_count,
            boundary_layer_nodes: layer,
            boundary_layer_flagged: layer > 3,
        },
        s_grid,
        t_grid: Some(t_grid),
        values: slices,
        policy,
        ties,
    })
}

/// Solves `1 − 4s V_s + min{0, 𝒟V} = 0`, `V(h) = 0` on `n_s` nodes over `[h, 1]`
/// by explicit pseudo-time iteration.
pub fn solve_hitting_time(threshold: f64, n_s: usize) -> Result<ValueGrid> {
    solve_hitting_time_with(threshold, n_s, MAX_ITERATIONS)
}

pub fn solve_hitting_time_with(threshold: f64, n_s: usize, max_iterations: usize) -> Result<ValueGrid> {
    check_threshold(threshold)?;
    if n_s < 3 {
        return Err(Error::GridTooCoarse(format!("need n_s >= 3, got {n_s}")));
    }
    let s_grid = uniform(threshold, 1.0, n_s);
    let ds = s_grid[1] - s_grid[0];
    let bound = stability_bound(&s_grid);
    // Only the fixed point matters, so each node takes its own largest
    // stable pseudo-time step.
    let local = |s: f64| SAFETY / (4.0 * s / ds + 16.0 * s * s * (1.0 - s) / (ds * ds));
    let stencil = Stencil::new(&s_grid, ds, local);
    let tie_tol = 10.0 * ds * ds;

    let mut cur = vec![0.0; n_s];
    let mut next = vec![0.0; n_s];
    let mut iterations = 0;
    let mut last = f64::INFINITY;
    let mut residual = f64::INFINITY;
    while iterations < max_iterations {
        stencil.sweep(&cur, 1.0, &mut next);
        iterations += 1;
        last = 0.0;
        residual = 0.0;
        for i in 1..n_s {
            let du = (next[i] - cur[i]).abs();
            last = last.max(du);
            residual = residual.max(du / stencil.dtau[i]);
        }
        std::mem::swap(&mut cur, &mut next);
        if last < CONVERGENCE_TOL && residual < RESIDUAL_TOL {
            break;
        }
    }
    if !(last < CONVERGENCE_TOL && residual < RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            iterations,
            last_update: last,
        });
    }
    let dtau = stencil.dtau.iter().copied().fold(f64::INFINITY, f64::min);
    let (p, t) = extract_policy(&cur, &s_grid, ds, tie_tol);
    let tie_count = t.iter().filter(|&&x| x).count();
    let layer = boundary_layer(&cur);
    Ok(ValueGrid {
        info: DpInfo {
            problem: DpProblem::HittingTime { threshold },
            n_s,
            ds,
            dtau,
            steps: iterations,
            stability_bound: bound,
            final_update: last,
            final_residual: residual,
            tie_tol,
            ties: tie_count,
            boundary_layer_nodes: layer,
            boundary_layer_flagged: layer > 3,
        },
        s_grid,
        t_grid: None,
        values: vec![cur],
        policy: vec![p],
        ties: vec![t],
    })
}

impl ValueGrid {
    pub fn is_stationary(&self) -> bool {
        self.t_grid.is_none()
    }

    pub fn ds(&self) -> f64 {
        self.info.ds
    }

    /// Row index and weight for linear interpolation in `t`.
    fn locate_t(&self, t: f64) -> Result<(usize, usize, f64, f64)> {
        let Some(times) = &self.t_grid else {
            return Ok((0, 0, 0.0, 0.0));
        };
        let (t0, t1) = (times[0], times[times.len() - 1]);
        if !(t.is_finite() && t >= t0 - 1e-12 && t <= t1 + 1e-12) {
            return Err(Error::domain("t", t, "the solved time range"));
        }
        if t1 == t0 {
            return Ok((0, 0, 0.0, 0.0));
        }
        let dt = times[1] - times[0];
        let k = (((t - t0) / dt).floor().max(0.0) as usize).min(times.len() - 2);
        let w = ((t - times[k]) / dt).clamp(0.0, 1.0);
        Ok((k, k + 1, w, dt))
    }

    /// Quadratic through the three nodes nearest `s`.
    fn s_stencil(&self, row: &[f64], s: f64) -> (f64, f64, f64) {
        let n = self.s_grid.len();
        let ds = self.info.ds;
        let x = (s - self.s_grid[0]) / ds;
        let j = (x.round() as isize).clamp(1, n as isize - 2) as usize;
        let u = x - j as f64;
        let (a, b, c) = (row[j - 1], row[j], row[j + 1]);
        let d1 = (c - a) / 2.0;
        let d2 = c - 2.0 * b + a;
        (b + u * d1 + 0.5 * u * u * d2, (d1 + u * d2) / ds, d2 / (ds * ds))
    }

    pub fn derivatives(&self, t: f64, s: f64) -> Result<Derivatives> {
        let lo = self.s_grid[0];
        if self.is_stationary() && s < lo && s >= 0.0 {
            return Ok(Derivatives {
                v: 0.0,
                vt: 0.0,
                vs: 0.0,
                vss: 0.0,
            });
        }
        if !(s.is_finite() && s >= lo - 1e-12 && s <= 1.0 + 1e-12) {
            return Err(Error::domain("s", s, "the solved entropy range"));
        }
        let (k0, k1, w, dt) = self.locate_t(t)?;
        let (v0, s0, ss0) = self.s_stencil(&self.values[k0], s);
        if k0 == k1 {
            return Ok(Derivatives {
                v: v0,
                vt: 0.0,
                vs: s0,
                vss: ss0,
            });
        }
        let (v1, s1, ss1) = self.s_stencil(&self.values[k1], s);
        Ok(Derivatives {
            v: (1.0 - w) * v0 + w * v1,
            vt: (v1 - v0) / dt,
            vs: (1.0 - w) * s0 + w * s1,
            vss: (1.0 - w) * ss0 + w * ss1,
        })
    }

    /// Sup-norm distance to another value function over every stored node.
    pub fn sup_error(&self, reference: &ValueFunction) -> Result<f64> {
        let times = self.t_grid.clone().unwrap_or_else(|| vec![0.0]);
        let mut worst = 0.0f64;
        for (k, &t) in times.iter().enumerate() {
            for (i, &s) in self.s_grid.iter().enumerate() {
                worst = worst.max((self.values[k][i] - reference.value(t, s)?).abs());
            }
        }
        Ok(worst)
    }

    /// Interior nodes (excluding both ends) whose policy differs from
    /// `expected`, ignoring ties.
    pub fn policy_mismatches(&self, expected: u8) -> usize {
        let n = self.s_grid.len();
        self.policy
            .iter()
            .zip(&self.ties)
            .map(|(p, t)| (1..n - 1).filter(|&i| !t[i] && p[i] != expected).count())
            .sum()
    }

    /// Long-format CSV: `t,s,V,policy`. Stationary grids use `t = 0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "s", "V", "policy"])?;
        let times = self.t_grid.clone().unwrap_or_else(|| vec![0.0]);
        for (k, &t) in times.iter().enumerate() {
            for (i, &s) in self.s_grid.iter().enumerate() {
                w.write_record([
                    format!("{t:.16e}"),
                    format!("{s:.16e}"),
                    format!("{:.16e}", self.values[k][i]),
                    self.policy[k][i].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv))?;
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&self.info)?,
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_s: usize,
    pub ds: f64,
    pub error: f64,
    /// Previous error over this one; absent on the first row.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub problem: DpProblem,
    pub rows: Vec<ConvergenceRow>,
    /// `log2` of the last ratio, for grids that double.
    pub observed_order: f64,
}

impl ConvergenceTable {
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Solves `problem` on each resolution and measures the sup-norm error against
/// the matching closed form. Resolutions are taken in the given order.
pub fn refine_and_extrapolate(problem: DpProblem, grids: &[usize]) -> Result<ConvergenceTable> {
    if grids.len() < 2 {
        return Err(Error::GridTooCoarse(format!(
            "refinement needs at least 2 resolutions, got {}",
            grids.len()
        )));
    }
    let (reference, solutions): (ValueFunction, Vec<Result<ValueGrid>>) = match problem {
        DpProblem::FiniteHorizon { cost, horizon, n_t } => (
            ValueFunction::analytic_jacobs(cost, horizon)?,
            grids
                .par_iter()
                .map(|&n| solve_finite_horizon(cost, horizon, n, n_t, None))
                .collect(),
        ),
        DpProblem::HittingTime { threshold } => (
            ValueFunction::analytic_min_time(threshold)?,
            grids
                .par_iter()
                .map(|&n| solve_hitting_time(threshold, n))
                .collect(),
        ),
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for sol in solutions {
        let g = sol?;
        let error = g.sup_error(&reference)?;
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(ConvergenceRow {
            n_s: g.info.n_s,
            ds: g.info.ds,
            error,
            ratio,
        });
    }
    let observed_order = rows.last().and_then(|r| r.ratio).map_or(f64::NAN, f64::log2);
    Ok(ConvergenceTable {
        problem,
        rows,
        observed_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_returns_terminal_cost() {
        for cost in [TerminalCost::LinearEntropy, TerminalCost::NegSqrtPurity] {
            let g = solve_finite_horizon(cost, 0.0, 51, 3, None).unwrap();
            for (i, &s) in g.s_grid.iter().enumerate() {
                assert_eq!(g.values[0][i], cost.eval(s));
            }
        }
    }

    #[test]
    fn terminal_slice_is_exact() {
        let g = solve_finite_horizon(TerminalCost::NegSqrtPurity, 0.2, 41, 5, None).unwrap();
        let last = g.values.last().unwrap();
        for (i, &s) in g.s_grid.iter().enumerate() {
            assert_eq!(last[i], TerminalCost::NegSqrtPurity.eval(s));
        }
    }

    #[test]
    fn too_few_substeps_are_refused() {
        let e = solve_finite_horizon(TerminalCost::LinearEntropy, 0.5, 101, 11, Some(1)).unwrap_err();
        match e {
            Error::Unstable { steps, required } => {
                assert_eq!(steps, 10);
                assert!(required > steps);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_horizon_matches_closed_form() {
        let g = solve_finite_horizon(TerminalCost::LinearEntropy, 0.5, 101, 11, None).unwrap();
        let vj = ValueFunction::analytic_jacobs(TerminalCost::LinearEntropy, 0.5).unwrap();
        assert!(g.sup_error(&vj).unwrap() < 5e-3);
        assert_eq!(g.policy_mismatches(0), 0);
    }

    #[test]
    fn solutions_are_monotone_in_s() {
        let g = solve_finite_horizon(TerminalCost::NegSqrtPurity, 0.5, 101, 6, None).unwrap();
        for row in &g.values {
            assert!(row.windows(2).all(|w| w[1] >= w[0]));
        }
        let h = solve_hitting_time(0.5, 101).unwrap();
        assert!(h.values[0].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn hitting_time_boundary_and_policy() {
        let g = solve_hitting_time(0.5, 201).unwrap();
        assert_eq!(g.values[0][0], 0.0);
        assert!((g.values[0][200] - 0.155_806_310_035_057_6).abs() < 5e-3);
        assert_eq!(g.policy_mismatches(1), 0);
        assert!(g.info.final_update < CONVERGENCE_TOL);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let e = solve_hitting_time_with(0.5, 51, 10).unwrap_err();
        assert!(matches!(e, Error::NoConvergence { iterations: 10, .. }));
    }

    #[test]
    fn grid_derivatives_follow_the_nodes() {
        let g = solve_finite_horizon(TerminalCost::LinearEntropy, 0.5, 201, 101, None).unwrap();
        let vf = ValueFunction::Grid(Box::new(g.clone()));
        let d = vf.derivatives(0.25, 0.5).unwrap();
        let k = (-4.0f64 * 0.25).exp();
        assert!((d.v - 0.5 * k).abs() < 1e-3);
        assert!((d.vs - k).abs() < 1e-2);
        assert!(d.vss.abs() < 1e-6);
        assert!((d.vt - 4.0 * 0.5 * k).abs() < 0.02);
        assert!(vf.derivatives(0.6, 0.5).is_err());
    }

    #[test]
    fn single_grid_refinement_is_an_error() {
        let p = DpProblem::HittingTime { threshold: 0.5 };
        assert!(matches!(refine_and_extrapolate(p, &[100]), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn csv_and_sidecar() {
        let g = solve_hitting_time(0.5, 11).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,s,V,policy"));
        assert_eq!(text.lines().count(), 12);
        let dir = tempfile::tempdir().unwrap();
        g.write_files(dir.path(), "hit").unwrap();
        let info: DpInfo =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("hit.json")).unwrap()).unwrap();
        assert_eq!(info, g.info);
    }
}
