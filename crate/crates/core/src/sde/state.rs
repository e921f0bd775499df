//! Qubit state representations and the conversions between them.
//!
//! All states live in the `y = 0` plane of the Bloch ball. Polar coordinates
//! follow `z = R cos θ`, `x = R sin θ`, and the linear entropy is `S = 1 − R²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used by the invariant checks on states.
pub const STATE_TOL: f64 = 1e-9;

/// Control value `u = cos θ`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ControlValue(f64);

impl ControlValue {
    pub const ZERO: ControlValue = ControlValue(0.0);
    pub const ONE: ControlValue = ControlValue(1.0);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() && v.abs() <= 1.0 {
            Ok(ControlValue(v))
        } else {
            Err(Error::domain("v", v, "[-1, 1]"))
        }
    }

    /// Clamps into `[-1, 1]`; NaN maps to 0.
    pub fn saturating(v: f64) -> Self {
        if v.is_nan() {
            ControlValue(0.0)
        } else {
            ControlValue(v.clamp(-1.0, 1.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Bloch angle in `[0, π]` realising this control.
    pub fn angle(self) -> f64 {
        self.0.acos()
    }
}

/// Linear entropy at a given time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurityState {
    pub s: f64,
    pub t: f64,
}

impl PurityState {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        check_entropy(s)?;
        Ok(PurityState { s, t })
    }

    pub fn radius(&self) -> f64 {
        (1.0 - self.s).max(0.0).sqrt()
    }
}

pub(crate) fn check_entropy(s: f64) -> Result<()> {
    if s.is_finite() && (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::domain("s", s, "[0, 1]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    /// A state in the `y = 0` plane.
    pub fn new(x: f64, z: f64) -> Result<Self> {
        Self::with_y(x, 0.0, z)
    }

    pub fn with_y(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = BlochState { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite Bloch vector {b:?}")));
        }
        let norm = b.norm();
        if norm > 1.0 + STATE_TOL {
            return Err(Error::domain("Bloch norm", norm, "[0, 1]"));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Linear entropy `1 − R²`.
    pub fn entropy(&self) -> f64 {
        (1.0 - (self.x * self.x + self.y * self.y + self.z * self.z)).clamp(0.0, 1.0)
    }

    /// Lossy: the angle is dropped.
    pub fn to_purity(&self, t: f64) -> PurityState {
        PurityState { s: self.entropy(), t }
    }

    pub fn to_polar(&self) -> PolarState {
        let r = (self.x * self.x + self.z * self.z).sqrt();
        // θ is 0 at the origin by convention
        let theta = if r == 0.0 { 0.0 } else { self.x.atan2(self.z) };
        PolarState { r, theta }
    }

    pub fn to_density(&self) -> DensityMatrix {
        let half = 0.5;
        DensityMatrix {
            m: [
                [
                    Complex64::new(half * (1.0 + self.z), 0.0),
                    Complex64::new(half * self.x, -half * self.y),
                ],
                [
                    Complex64::new(half * self.x, half * self.y),
                    Complex64::new(half * (1.0 - self.z), 0.0),
                ],
            ],
        }
    }

    /// Shrinks the vector onto the unit sphere if it left the ball.
    pub(crate) fn clip_norm(mut self) -> Self {
        let n = self.norm();
        if n > 1.0 {
            self.x /= n;
            self.y /= n;
            self.z /= n;
        }
        self
    }
}

/// `(R, θ)` with `z = R cos θ`, `x = R sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
}

impl PolarState {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r.is_finite() && theta.is_finite()) || !(0.0..=1.0 + STATE_TOL).contains(&r) {
            return Err(Error::domain("R", r, "[0, 1]"));
        }
        Ok(PolarState { r, theta })
    }

    pub fn to_bloch(&self) -> BlochState {
        BlochState {
            x: self.r * self.theta.sin(),
            y: 0.0,
            z: self.r * self.theta.cos(),
        }
    }

    pub fn entropy(&self) -> f64 {
        (1.0 - self.r * self.r).clamp(0.0, 1.0)
    }

    pub fn control(&self) -> ControlValue {
        ControlValue::saturating(self.theta.cos())
    }
}

impl From<PolarState> for BlochState {
    fn from(p: PolarState) -> Self {
        p.to_bloch()
    }
}

impl From<BlochState> for PolarState {
    fn from(b: BlochState) -> Self {
        b.to_polar()
    }
}

impl From<BlochState> for DensityMatrix {
    fn from(b: BlochState) -> Self {
        b.to_density()
    }
}

impl From<DensityMatrix> for BlochState {
    fn from(rho: DensityMatrix) -> Self {
        rho.to_bloch()
    }
}

/// Builds the pure-or-mixed state at radius `sqrt(1 − s)` and angle `θ`.
pub fn bloch_from_entropy(s: f64, theta: f64) -> Result<BlochState> {
    check_entropy(s)?;
    Ok(PolarState {
        r: (1.0 - s).sqrt(),
        theta,
    }
    .to_bloch())
}

/// Instantaneous rotation in the x–z plane to angle `theta_target`,
/// preserving the Bloch radius. The origin is left in place.
pub fn rotate_to_angle(state: &BlochState, theta_target: f64) -> Result<BlochState> {
    if state.y != 0.0 {
        return Err(Error::InvalidState(format!(
            "rotation requires y = 0, got y = {}",
            state.y
        )));
    }
    let r = (state.x * state.x + state.z * state.z).sqrt();
    if r == 0.0 {
        return Ok(BlochState { x: 0.0, y: 0.0, z: 0.0 });
    }
    Ok(PolarState {
        r,
        theta: theta_target,
    }
    .to_bloch())
}

/// 2×2 conditional state matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub m: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let rho = DensityMatrix { m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn maximally_mixed() -> Self {
        BlochState { x: 0.0, y: 0.0, z: 0.0 }.to_density()
    }

    /// `|0⟩⟨0|`, the `σ_z = +1` eigenstate.
    pub fn ground() -> Self {
        BlochState { x: 0.0, y: 0.0, z: 1.0 }.to_density()
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.m;
        if m.iter().flatten().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidState("non-finite density matrix entry".into()));
        }
        let herm = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let (lo, _) = self.eigenvalues();
        if lo < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - rad, mean + rad)
    }

    /// `Tr[σ_z ρ]`.
    pub fn expect_z(&self) -> f64 {
        self.m[0][0].re - self.m[1][1].re
    }

    pub fn to_bloch(&self) -> BlochState {
        BlochState {
            x: 2.0 * self.m[1][0].re,
            y: 2.0 * self.m[1][0].im,
            z: self.expect_z(),
        }
    }

    /// `1 − R² = 2(1 − Tr ρ²)`.
    pub fn entropy(&self) -> f64 {
        let purity: f64 = self
            .m
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>();
        (2.0 * (1.0 - purity)).clamp(0.0, 1.0)
    }
}
