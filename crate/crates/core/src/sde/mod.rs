//! State representations and integrators for the monitored-qubit filter.

mod constrained;
mod noise;
mod state;
mod step;
mod trajectory;

pub use constrained::{singular_step_bloch, singular_step_rho};
pub use noise::{BrownianPath, Channel, NoiseStream};
pub(crate) use state::check_entropy as state_check_entropy;
pub(crate) use step::{advance_s, diffusion_unchecked, drift_unchecked};
pub use state::{
    bloch_from_entropy, rotate_to_angle, BlochState, ControlValue, DensityMatrix, PolarState,
    PurityState, STATE_TOL,
};
pub use step::{
    diffusion_s, diffusion_s_derivative, drift_s, measurement_increment, step_bloch, step_rho,
    step_s, PositivityRepair,
};
pub use trajectory::{TrajectoryRecord, TrajectorySample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    EulerMaruyama,
    Milstein,
}

/// Out-of-range values are clipped back to the invariant set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundaryPolicy {
    #[default]
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub boundary: BoundaryPolicy,
}

impl StepConfig {
    pub fn new(dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain("dt", dt, "(0, inf)"));
        }
        Ok(StepConfig {
            dt,
            scheme,
            boundary: BoundaryPolicy::Clip,
        })
    }

    pub fn euler(dt: f64) -> Result<Self> {
        Self::new(dt, Scheme::EulerMaruyama)
    }

    pub fn milstein(dt: f64) -> Result<Self> {
        Self::new(dt, Scheme::Milstein)
    }

    /// Same scheme at a different step size.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(dt, self.scheme)
    }
}
