//! Numerical checks of the two verification theorems on node grids.
//!
//! Each theorem has four conditions: smoothness of `V`, the equation
//! `∂_t V + 𝓛^{u} V = 0` (or `𝓛^{u} V + 1 = 0`) under the candidate control,
//! the inequality for every other control, and the terminal or boundary
//! condition. The inequality is checked at `v ∈ {0, 1}` only, which is exact
//! because the residual is affine in `v²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::value::{Derivatives, ValueFunction};
use super::generator_from;
use crate::error::{Error, Result};
use crate::strategies::{check_threshold, Strategy, TerminalCost};

/// Excludes the degenerate end points `s = 0` and `s = 1`.
pub const INTERIOR_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub t: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub pass: bool,
    /// Largest `|residual|` for equalities, most negative value for
    /// inequalities, largest second divided difference for smoothness.
    pub worst_residual: f64,
    pub location: Option<Location>,
    /// Irregular nodes noted by the smoothness check; never a failure.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub flagged: usize,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub criteria: Vec<CriterionResult>,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn criterion(&self, name: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteHorizonGrid {
    pub horizon: f64,
    pub n_t: usize,
    pub n_s: usize,
    pub margin: f64,
}

impl FiniteHorizonGrid {
    pub fn new(horizon: f64, n_t: usize, n_s: usize) -> Self {
        FiniteHorizonGrid {
            horizon,
            n_t,
            n_s,
            margin: INTERIOR_MARGIN,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_t < 2 || self.n_s < 3 {
            return Err(Error::GridTooCoarse(format!(
                "need n_t >= 2 and n_s >= 3, got {} x {}",
                self.n_t, self.n_s
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::domain("T", self.horizon, "(0, inf)"));
        }
        Ok(())
    }

    fn times(&self) -> Vec<f64> {
        linspace(0.0, self.horizon, self.n_t)
    }

    fn entropies(&self) -> Vec<f64> {
        linspace(self.margin, 1.0 - self.margin, self.n_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeGrid {
    pub threshold: f64,
    pub n_s: usize,
    pub margin: f64,
}

impl HittingTimeGrid {
    pub fn new(threshold: f64, n_s: usize) -> Self {
        HittingTimeGrid {
            threshold,
            n_s,
            margin: INTERIOR_MARGIN,
        }
    }

    fn entropies(&self) -> Vec<f64> {
        linspace(self.threshold, 1.0 - self.margin, self.n_s)
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// Running worst case for one criterion.
struct Tracker {
    worst: f64,
    at: Option<Location>,
    inequality: bool,
}

impl Tracker {
    fn equality() -> Self {
        Tracker {
            worst: 0.0,
            at: None,
            inequality: false,
        }
    }

    fn inequality() -> Self {
        Tracker {
            worst: f64::INFINITY,
            at: None,
            inequality: true,
        }
    }

    fn push(&mut self, r: f64, t: f64, s: f64) {
        let worse = if self.inequality {
            r < self.worst || r.is_nan()
        } else {
            r.abs() > self.worst.abs() || r.is_nan()
        };
        if worse || self.at.is_none() {
            self.worst = if self.inequality { r } else { r.abs() };
            self.at = Some(Location { t, s });
        }
    }

    fn finish(self, name: &str, tol: f64) -> CriterionResult {
        let pass = if self.inequality {
            self.worst >= -tol
        } else {
            self.worst <= tol
        };
        CriterionResult {
            name: name.to_string(),
            pass,
            worst_residual: self.worst,
            location: self.at,
            flagged: 0,
        }
    }
}

fn node_derivatives(vf: &ValueFunction, nodes: &[(f64, f64)]) -> Result<Vec<Derivatives>> {
    nodes
        .par_iter()
        .map(|&(t, s)| vf.derivatives(t, s))
        .collect()
}

/// Smoothness: closed forms pass outright. Grid-backed functions must have
/// finite second divided differences; nodes where one exceeds ten times the
/// median magnitude on its slice are flagged.
fn smoothness(vf: &ValueFunction, times: &[f64], entropies: &[f64]) -> Result<CriterionResult> {
    if vf.is_analytic() {
        return Ok(CriterionResult {
            name: "C1_smoothness".into(),
            pass: true,
            worst_residual: 0.0,
            location: None,
            flagged: 0,
        });
    }
    let mut worst = 0.0f64;
    let mut at = None;
    let mut flagged = 0;
    let mut finite = true;
    for &t in times {
        let vals = entropies
            .iter()
            .map(|&s| vf.value(t, s))
            .collect::<Result<Vec<_>>>()?;
        let d2: Vec<f64> = (1..entropies.len() - 1)
            .map(|j| {
                let h0 = entropies[j] - entropies[j - 1];
                let h1 = entropies[j + 1] - entropies[j];
                2.0 * ((vals[j + 1] - vals[j]) / h1 - (vals[j] - vals[j - 1]) / h0) / (h0 + h1)
            })
            .collect();
        let mut mags: Vec<f64> = d2.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| a.total_cmp(b));
        let median = mags.get(mags.len() / 2).copied().unwrap_or(0.0);
        for (j, &x) in d2.iter().enumerate() {
            finite &= x.is_finite();
            if x.abs() > 10.0 * median + 1e-12 {
                flagged += 1;
            }
            if x.abs() > worst || at.is_none() {
                worst = x.abs();
                at = Some(Location {
                    t,
                    s: entropies[j + 1],
                });
            }
        }
    }
    Ok(CriterionResult {
        name: "C1_smoothness".into(),
        pass: finite,
        worst_residual: worst,
        location: at,
        flagged,
    })
}

/// Checks the finite-horizon verification theorem for the pair `(V, u)`.
pub fn verify_finite_horizon(
    vf: &ValueFunction,
    strategy: &Strategy,
    cost: TerminalCost,
    grid: &FiniteHorizonGrid,
    tol: f64,
) -> Result<VerificationReport> {
    grid.check()?;
    let times = grid.times();
    let entropies = grid.entropies();
    let nodes: Vec<(f64, f64)> = times
        .iter()
        .flat_map(|&t| entropies.iter().map(move |&s| (t, s)))
        .collect();
    let derivs = node_derivatives(vf, &nodes)?;

    let mut equation = Tracker::equality();
    let mut inequality = Tracker::inequality();
    for (&(t, s), d) in nodes.iter().zip(&derivs) {
        let u = strategy.evaluate(t, s).get();
        equation.push(d.vt + generator_from(d, s, u), t, s);
        for v in [0.0, 1.0] {
            inequality.push(d.vt + generator_from(d, s, v), t, s);
        }
    }
    let mut terminal = Tracker::equality();
    for &s in &entropies {
        terminal.push(vf.value(grid.horizon, s)? - cost.eval(s), grid.horizon, s);
    }

    Ok(VerificationReport {
        criteria: vec![
            smoothness(vf, &times, &entropies)?,
            equation.finish("C2_policy_equation", tol),
            inequality.finish("C3_optimality_inequality", tol),
            terminal.finish("C4_terminal_condition", tol),
        ],
        tolerance: tol,
    })
}

/// Checks the first-passage verification theorem for the stationary pair
/// `(V, u)` on `[h, 1 − margin]`.
pub fn verify_hitting_time(
    vf: &ValueFunction,
    strategy: &Strategy,
    threshold: f64,
    grid: &HittingTimeGrid,
    tol: f64,
) -> Result<VerificationReport> {
    check_threshold(threshold)?;
    if grid.n_s < 3 {
        return Err(Error::GridTooCoarse(format!("need n_s >= 3, got {}", grid.n_s)));
    }
    let entropies = grid.entropies();
    let nodes: Vec<(f64, f64)> = entropies.iter().map(|&s| (0.0, s)).collect();
    let derivs = node_derivatives(vf, &nodes)?;

    let mut equation = Tracker::equality();
    let mut inequality = Tracker::inequality();
    for (&(t, s), d) in nodes.iter().zip(&derivs) {
        let u = strategy.evaluate(t, s).get();
        equation.push(generator_from(d, s, u) + 1.0, t, s);
        for v in [0.0, 1.0] {
            inequality.push(generator_from(d, s, v) + 1.0, t, s);
        }
    }
    let mut boundary = Tracker::equality();
    boundary.push(vf.value(0.0, threshold)?, 0.0, threshold);

    Ok(VerificationReport {
        criteria: vec![
            smoothness(vf, &[0.0], &entropies)?,
            equation.finish("C2_policy_equation", tol),
            inequality.finish("C3_optimality_inequality", tol),
            boundary.finish("C4_boundary_condition", tol),
        ],
        tolerance: tol,
    })
}
