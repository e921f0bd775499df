//! The controlled generator of the entropy diffusion and the Bellman and
//! verification-theorem checks built on it.
//!
//! For the diffusion `dS = a(s,v) dt + b(s,v) dW` the generator is
//!
//! ```text
//! 𝓛^v V = −4s[1 − (1−s)v²] ∂_s V + 8s²(1−s) v² ∂²_s V
//!       = −4s ∂_s V + v² 𝒟V,
//! 𝒟V    = 4s(1−s) ∂_s V + 8s²(1−s) ∂²_s V.
//! ```
//!
//! Because the generator is affine in `v²`, minimising over `v ∈ [−1, 1]`
//! reduces to the sign of `𝒟V`: `v = 0` when `𝒟V > 0`, `v = 1` when `𝒟V < 0`.

mod value;
mod verify;

pub use value::{Derivatives, ValueFunction};
pub use verify::{
    verify_finite_horizon, verify_hitting_time, CriterionResult, FiniteHorizonGrid,
    HittingTimeGrid, Location, VerificationReport, INTERIOR_MARGIN,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sde::ControlValue;

/// Default half-width of the band around `𝒟V = 0` treated as a tie.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellmanMode {
    FiniteHorizon,
    HittingTime,
}

/// Minimiser of `𝓛^v V` over `v²`, with ties kept distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyChoice {
    Zero,
    One,
    Tie,
}

impl PolicyChoice {
    pub fn from_d(d: f64, tie_tol: f64) -> Self {
        if d > tie_tol {
            PolicyChoice::Zero
        } else if d < -tie_tol {
            PolicyChoice::One
        } else {
            PolicyChoice::Tie
        }
    }

    /// Ties resolve to `0`.
    pub fn control(self) -> ControlValue {
        match self {
            PolicyChoice::One => ControlValue::ONE,
            _ => ControlValue::ZERO,
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if s.is_finite() && (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::domain("s", s, "[0, 1]"))
    }
}

pub(crate) fn generator_from(d: &Derivatives, s: f64, v: f64) -> f64 {
    let v2 = v * v;
    -4.0 * s * (1.0 - (1.0 - s) * v2) * d.vs + 8.0 * s * s * (1.0 - s) * v2 * d.vss
}

pub(crate) fn d_from(d: &Derivatives, s: f64) -> f64 {
    4.0 * s * (1.0 - s) * d.vs + 8.0 * s * s * (1.0 - s) * d.vss
}

/// `𝓛^v V(t, s)`.
pub fn generator_apply(vf: &ValueFunction, t: f64, s: f64, v: ControlValue) -> Result<f64> {
    check_s(s)?;
    let d = vf.derivatives(t, s)?;
    Ok(generator_from(&d, s, v.get()))
}

/// `𝒟V(t, s)`, the `v²` coefficient of the generator.
pub fn d_operator(vf: &ValueFunction, t: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    let d = vf.derivatives(t, s)?;
    Ok(d_from(&d, s))
}

pub fn classify_policy(vf: &ValueFunction, t: f64, s: f64, tie_tol: f64) -> Result<PolicyChoice> {
    Ok(PolicyChoice::from_d(d_operator(vf, t, s)?, tie_tol))
}

/// Minimiser of `v ↦ 𝓛^v V(t, s)` over `[0, 1]`; ties resolve to `0`.
pub fn candidate_policy(vf: &ValueFunction, t: f64, s: f64) -> Result<ControlValue> {
    Ok(classify_policy(vf, t, s, TIE_TOL)?.control())
}

/// Signed residual of the Bellman equation at one node.
///
/// * finite horizon: `∂_t V − 4s ∂_s V + min{0, 𝒟V}`
/// * hitting time (stationary): `1 − 4s ∂_s V + min{0, 𝒟V}`
pub fn bellman_residual(vf: &ValueFunction, t: f64, s: f64, mode: BellmanMode) -> Result<f64> {
    check_s(s)?;
    let d = vf.derivatives(t, s)?;
    let base = match mode {
        BellmanMode::FiniteHorizon => d.vt,
        BellmanMode::HittingTime => 1.0,
    };
    Ok(base - 4.0 * s * d.vs + d_from(&d, s).min(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::TerminalCost;
    use proptest::prelude::*;

    fn cv(x: f64) -> ControlValue {
        ControlValue::new(x).unwrap()
    }

    fn linear() -> ValueFunction {
        ValueFunction::Polynomial(vec![0.0, 1.0])
    }

    #[test]
    fn generator_examples() {
        for &s in &[0.1, 0.5, 0.9] {
            assert!((generator_apply(&linear(), 0.0, s, cv(0.0)).unwrap() + 4.0 * s).abs() < 1e-15);
        }
        assert!((generator_apply(&linear(), 0.0, 0.5, cv(1.0)).unwrap() + 1.0).abs() < 1e-15);
        let vj = ValueFunction::analytic_jacobs(TerminalCost::LinearEntropy, 0.5).unwrap();
        for &(t, s) in &[(0.0, 0.3), (0.2, 0.7), (0.5, 0.99)] {
            let d = vj.derivatives(t, s).unwrap();
            let lhs = d.vt + generator_apply(&vj, t, s, cv(0.0)).unwrap();
            assert!(lhs.abs() < 1e-14);
        }
    }

    #[test]
    fn d_operator_examples() {
        assert!((d_operator(&linear(), 0.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let mt = ValueFunction::analytic_min_time(0.5).unwrap();
        assert!((d_operator(&mt, 0.0, 0.5).unwrap() + 0.188_388).abs() < 1e-6);
        for cost in [TerminalCost::LinearEntropy, TerminalCost::NegSqrtPurity] {
            let vj = ValueFunction::analytic_jacobs(cost, 0.5).unwrap();
            for i in 0..=20 {
                for j in 1..20 {
                    let (t, s) = (0.5 * i as f64 / 20.0, j as f64 / 20.0);
                    assert!(d_operator(&vj, t, s).unwrap() >= 0.0);
                }
            }
        }
        // vanishes at both ends
        assert_eq!(d_operator(&mt, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(d_operator(&linear(), 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn neg_sqrt_d_operator_closed_form() {
        let horizon = 0.5;
        let vj = ValueFunction::analytic_jacobs(TerminalCost::NegSqrtPurity, horizon).unwrap();
        for i in 0..=50 {
            for j in 1..50 {
                let (t, s) = (horizon * i as f64 / 50.0, j as f64 / 50.0);
                let k = (-4.0 * (horizon - t)).exp();
                let expect = 2.0 * s * (1.0 - s) * k / (1.0 - s * k).powf(1.5);
                let got = d_operator(&vj, t, s).unwrap();
                assert!((got - expect).abs() <= 1e-12 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn candidate_policy_examples() {
        let vj = ValueFunction::analytic_jacobs(TerminalCost::NegSqrtPurity, 1.0).unwrap();
        assert_eq!(candidate_policy(&vj, 0.3, 0.4).unwrap().get(), 0.0);
        let mt = ValueFunction::analytic_min_time(0.2).unwrap();
        assert_eq!(candidate_policy(&mt, 0.0, 0.6).unwrap().get(), 1.0);
        let c = ValueFunction::Polynomial(vec![3.0]);
        assert_eq!(classify_policy(&c, 0.0, 0.6, TIE_TOL).unwrap(), PolicyChoice::Tie);
        assert_eq!(candidate_policy(&c, 0.0, 0.6).unwrap().get(), 0.0);
    }

    #[test]
    fn candidate_policy_is_bang_bang_on_dense_grid() {
        let vj = ValueFunction::analytic_jacobs(TerminalCost::LinearEntropy, 0.5).unwrap();
        let mt = ValueFunction::analytic_min_time(0.5).unwrap();
        for i in 0..200 {
            for j in 1..199 {
                let t = 0.5 * i as f64 / 199.0;
                let s = j as f64 / 199.0;
                assert_eq!(candidate_policy(&vj, t, s).unwrap().get(), 0.0);
                let sw = 0.5 + 0.5 * j as f64 / 199.0;
                assert_eq!(candidate_policy(&mt, 0.0, sw).unwrap().get(), 1.0);
            }
        }
    }

    #[test]
    fn bellman_residual_examples() {
        for cost in [TerminalCost::LinearEntropy, TerminalCost::NegSqrtPurity] {
            let vj = ValueFunction::analytic_jacobs(cost, 0.5).unwrap();
            for &(t, s) in &[(0.0, 0.2), (0.3, 0.5), (0.49, 0.95)] {
                let r = bellman_residual(&vj, t, s, BellmanMode::FiniteHorizon).unwrap();
                assert!(r.abs() < 1e-13, "{r}");
            }
        }
        let mt = ValueFunction::analytic_min_time(0.3).unwrap();
        for &s in &[0.3, 0.5, 0.8, 0.999] {
            let r = bellman_residual(&mt, 0.0, s, BellmanMode::HittingTime).unwrap();
            assert!(r.abs() < 1e-13, "{r}");
        }
        let r = bellman_residual(&linear(), 0.0, 0.5, BellmanMode::HittingTime).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_entropy_is_an_error() {
        assert!(generator_apply(&linear(), 0.0, 1.5, cv(0.0)).is_err());
        assert!(d_operator(&linear(), 0.0, -0.5).is_err());
    }

    proptest! {
        #[test]
        fn generator_is_affine_in_v_squared(
            t in 0.0f64..0.5, s in 0.01f64..0.99, v in -1.0f64..=1.0, which in 0usize..3
        ) {
            let vf = match which {
                0 => ValueFunction::analytic_jacobs(TerminalCost::LinearEntropy, 0.5).unwrap(),
                1 => ValueFunction::analytic_jacobs(TerminalCost::NegSqrtPurity, 0.5).unwrap(),
                _ => ValueFunction::analytic_min_time(0.005).unwrap(),
            };
            let d = vf.derivatives(t, s).unwrap();
            let lhs = generator_apply(&vf, t, s, cv(v)).unwrap();
            let rhs = -4.0 * s * d.vs + v * v * d_operator(&vf, t, s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + d.vs.abs() + d.vss.abs()));
        }
    }
}
