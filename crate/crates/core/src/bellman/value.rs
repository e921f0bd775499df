//! Value functions with first and second derivatives in `s` and the time
//! derivative, either in closed form or from a solved grid.

use crate::dp::ValueGrid;
use crate::error::{Error, Result};
use crate::strategies::{check_threshold, gamma, TerminalCost};

/// `V`, `∂V/∂t`, `∂V/∂s`, `∂²V/∂s²` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub v: f64,
    pub vt: f64,
    pub vs: f64,
    pub vss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueFunction {
    /// `V(t, s) = F(s·e^{−4(T−t)})`, the cost-to-go of holding `u = 0`.
    AnalyticJacobs { cost: TerminalCost, horizon: f64 },
    /// `V(s) = [γ(h) − γ(s)]/4` for `s ≥ h` and `0` below, the mean remaining
    /// time to reach `h` when holding `u = 1`.
    AnalyticMinTime { threshold: f64 },
    Grid(Box<ValueGrid>),
    /// Stationary polynomial `Σ c_k s^k`.
    Polynomial(Vec<f64>),
    Scaled { inner: Box<ValueFunction>, factor: f64 },
}

impl ValueFunction {
    pub fn analytic_jacobs(cost: TerminalCost, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::domain("T", horizon, "[0, inf)"));
        }
        Ok(ValueFunction::AnalyticJacobs { cost, horizon })
    }

    pub fn analytic_min_time(threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(ValueFunction::AnalyticMinTime { threshold })
    }

    pub fn zero() -> Self {
        ValueFunction::Polynomial(Vec::new())
    }

    pub fn scaled(self, factor: f64) -> Self {
        ValueFunction::Scaled {
            inner: Box::new(self),
            factor,
        }
    }

    /// Closed forms are smooth by construction; grids need a check.
    pub fn is_analytic(&self) -> bool {
        match self {
            ValueFunction::Grid(_) => false,
            ValueFunction::Scaled { inner, .. } => inner.is_analytic(),
            _ => true,
        }
    }

    pub fn value(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.derivatives(t, s)?.v)
    }

    pub fn derivatives(&self, t: f64, s: f64) -> Result<Derivatives> {
        match self {
            ValueFunction::AnalyticJacobs { cost, horizon } => {
                let k = (-4.0 * (horizon - t)).exp();
                let x = s * k;
                let f1 = cost.derivative(x);
                Ok(Derivatives {
                    v: cost.eval(x),
                    vt: 4.0 * s * k * f1,
                    vs: k * f1,
                    vss: k * k * cost.second_derivative(x),
                })
            }
            ValueFunction::AnalyticMinTime { threshold } => min_time_derivatives(*threshold, s),
            ValueFunction::Grid(grid) => grid.derivatives(t, s),
            ValueFunction::Polynomial(c) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &ck in c.iter().rev() {
                    d2 = d2 * s + 2.0 * d1;
                    d1 = d1 * s + v;
                    v = v * s + ck;
                }
                Ok(Derivatives {
                    v,
                    vt: 0.0,
                    vs: d1,
                    vss: d2,
                })
            }
            ValueFunction::Scaled { inner, factor } => {
                let d = inner.derivatives(t, s)?;
                Ok(Derivatives {
                    v: factor * d.v,
                    vt: factor * d.vt,
                    vs: factor * d.vs,
                    vss: factor * d.vss,
                })
            }
        }
    }
}

/// Below this `r = √(1−s)` the second derivative switches to its series.
const MIN_TIME_SERIES_R: f64 = 1e-3;

fn min_time_derivatives(h: f64, s: f64) -> Result<Derivatives> {
    if s < h {
        return Ok(Derivatives {
            v: 0.0,
            vt: 0.0,
            vs: 0.0,
            vss: 0.0,
        });
    }
    let v = (gamma(h)? - gamma(s)?) / 4.0;
    let r = (1.0 - s).max(0.0).sqrt();
    // atanh(r)/r, continuous at r = 0
    let atanh_over_r = if r < MIN_TIME_SERIES_R {
        let r2 = r * r;
        1.0 + r2 / 3.0 + r2 * r2 / 5.0
    } else {
        (r.ln_1p() - 0.5 * s.ln()) / r
    };
    let vs = atanh_over_r / 8.0 + 1.0 / (8.0 * s);
    let vss = if r < MIN_TIME_SERIES_R {
        let r2 = r * r;
        (-2.0 / 3.0 - 0.8 * r2 - 6.0 / 7.0 * r2 * r2) / 16.0 - 1.0 / (8.0 * s * s)
    } else {
        atanh_over_r / (16.0 * r * r) - 1.0 / (16.0 * s * r * r) - 1.0 / (8.0 * s * s)
    };
    Ok(Derivatives {
        v,
        vt: 0.0,
        vs,
        vss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(vf: &ValueFunction, t: f64, s: f64, step: f64, tol: f64) {
        let d = vf.derivatives(t, s).unwrap();
        let val = |t: f64, s: f64| vf.value(t, s).unwrap();
        let vs = (val(t, s + step) - val(t, s - step)) / (2.0 * step);
        let vss = (val(t, s + step) - 2.0 * val(t, s) + val(t, s - step)) / (step * step);
        let vt = (val(t + step, s) - val(t - step, s)) / (2.0 * step);
        assert!((vs - d.vs).abs() < tol * (1.0 + d.vs.abs()), "vs {vs} vs {}", d.vs);
        assert!((vss - d.vss).abs() < 1e3 * tol * (1.0 + d.vss.abs()), "vss {vss} vs {}", d.vss);
        assert!((vt - d.vt).abs() < tol * (1.0 + d.vt.abs()), "vt {vt} vs {}", d.vt);
    }

    #[test]
    fn jacobs_derivatives_match_differences() {
        for cost in [TerminalCost::LinearEntropy, TerminalCost::NegSqrtPurity] {
            let vf = ValueFunction::analytic_jacobs(cost, 0.5).unwrap();
            for &(t, s) in &[(0.1, 0.2), (0.25, 0.6), (0.4, 0.9)] {
                fd_check(&vf, t, s, 1e-5, 1e-7);
            }
        }
    }

    #[test]
    fn min_time_derivatives_match_differences() {
        let vf = ValueFunction::analytic_min_time(0.3).unwrap();
        for &s in &[0.35, 0.5, 0.8, 0.99] {
            fd_check(&vf, 0.0, s, 1e-5, 1e-7);
        }
    }

    #[test]
    fn min_time_series_branch_is_continuous() {
        let vf = ValueFunction::analytic_min_time(0.5).unwrap();
        let r = MIN_TIME_SERIES_R;
        let s_in = 1.0 - (r * 0.999) * (r * 0.999);
        let s_out = 1.0 - (r * 1.001) * (r * 1.001);
        let a = vf.derivatives(0.0, s_in).unwrap();
        let b = vf.derivatives(0.0, s_out).unwrap();
        assert!((a.vs - b.vs).abs() < 1e-8);
        assert!((a.vss - b.vss).abs() < 1e-6);
        let end = vf.derivatives(0.0, 1.0).unwrap();
        assert!((end.vs - 0.25).abs() < 1e-15);
        assert!(end.vss.is_finite());
    }

    #[test]
    fn boundary_conditions_hold_exactly() {
        for cost in [TerminalCost::LinearEntropy, TerminalCost::NegSqrtPurity] {
            let vf = ValueFunction::analytic_jacobs(cost, 0.7).unwrap();
            for k in 0..=10 {
                let s = k as f64 / 10.0;
                assert_eq!(vf.value(0.7, s).unwrap(), cost.eval(s));
            }
        }
        let mt = ValueFunction::analytic_min_time(0.4).unwrap();
        assert_eq!(mt.value(0.0, 0.4).unwrap(), 0.0);
        assert_eq!(mt.value(0.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_and_scaled() {
        let p = ValueFunction::Polynomial(vec![1.0, -2.0, 3.0]);
        let d = p.derivatives(0.0, 0.5).unwrap();
        assert!((d.v - (1.0 - 1.0 + 0.75)).abs() < 1e-15);
        assert!((d.vs - (-2.0 + 3.0)).abs() < 1e-15);
        assert!((d.vss - 6.0).abs() < 1e-15);
        let z = ValueFunction::zero().derivatives(0.3, 0.3).unwrap();
        assert_eq!((z.v, z.vs, z.vss), (0.0, 0.0, 0.0));
        let sc = p.scaled(2.0).derivatives(0.0, 0.5).unwrap();
        assert!((sc.vss - 12.0).abs() < 1e-15);
    }
}
