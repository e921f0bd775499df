//! Steps of the Bloch and density-matrix filters in the singular-control
//! limit, where the angle is held at `θ` continuously rather than reset once
//! per step.
//!
//! With the angle pinned, the state moves only along the ray at angle `θ`.
//! Writing the unconstrained noise field as radial plus tangential parts,
//! `b = b_r e_r + b_t e_t`, the tangential displacement is rotated away as it
//! arises and only its quadratic variation survives, so the radius obeys
//!
//! ```text
//! dR = (a_r + b_t² / 2R) dt + b_r dW
//! ```
//!
//! Both routes below evaluate `a_r`, `b_r`, `b_t` and `∂b_r/∂R` from their own
//! native vector fields and then take one Euler or Milstein step in `R`.
//! Resetting the angle once per discrete step instead leaves a residual
//! `b_t²(ΔW² − dt)` in `R²` every step, which converges only at `O(√dt)`.

use num_complex::Complex64;

use super::state::{BlochState, DensityMatrix, PolarState};
use super::{Scheme, StepConfig};
use crate::error::{Error, Result};

/// Radii below this are rejected when the tangential term is active.
const MIN_RADIUS: f64 = 1e-9;

struct RadialCoefficients {
    drift: f64,
    noise: f64,
    noise_slope: f64,
}

fn radial_step(r: f64, c: &RadialCoefficients, dw: f64, cfg: &StepConfig) -> f64 {
    let mut next = r + c.drift * cfg.dt + c.noise * dw;
    if cfg.scheme == Scheme::Milstein {
        next += 0.5 * c.noise * c.noise_slope * (dw * dw - cfg.dt);
    }
    // a step through the origin lands on the opposite ray, which the held
    // angle maps straight back
    next.abs().min(1.0)
}

fn check_radius(r: f64, sin_t: f64) -> Result<()> {
    if r < MIN_RADIUS && sin_t.abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "singular-limit step undefined at radius {r:e} with |u| < 1"
        )));
    }
    Ok(())
}

/// Bloch route: coefficients from `a = (−2x, 0)` and `b = (−2zx, 2(1−z²))`.
pub fn singular_step_bloch(
    state: &BlochState,
    theta: f64,
    dw: f64,
    cfg: &StepConfig,
) -> Result<BlochState> {
    if state.y != 0.0 {
        return Err(Error::InvalidState("singular step requires y = 0".into()));
    }
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise(dw));
    }
    let r = (state.x * state.x + state.z * state.z).sqrt();
    let (sin_t, cos_t) = theta.sin_cos();
    check_radius(r, sin_t)?;
    let (x, z) = (r * sin_t, r * cos_t);

    let (ax, az) = (-2.0 * x, 0.0);
    let (bx, bz) = (-2.0 * z * x, 2.0 * (1.0 - z * z));
    let a_r = ax * sin_t + az * cos_t;
    let b_r = bx * sin_t + bz * cos_t;
    let b_t = bx * cos_t - bz * sin_t;
    // Jacobian of b applied to e_r, projected back onto e_r
    let jx = -2.0 * z * sin_t - 2.0 * x * cos_t;
    let jz = -4.0 * z * cos_t;
    let slope = jx * sin_t + jz * cos_t;

    let tangential = if b_t == 0.0 { 0.0 } else { b_t * b_t / (2.0 * r) };
    let coeffs = RadialCoefficients {
        drift: a_r + tangential,
        noise: b_r,
        noise_slope: slope,
    };
    let next = radial_step(r, &coeffs, dw, cfg);
    Ok(PolarState { r: next, theta }.to_bloch())
}

type Mat = [[Complex64; 2]; 2];

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `(I + R σ_n)/2` with `σ_n = sin θ σ_x + cos θ σ_z`.
fn ray_state(r: f64, sin_t: f64, cos_t: f64) -> Mat {
    [
        [Complex64::new(0.5 * (1.0 + r * cos_t), 0.0), Complex64::new(0.5 * r * sin_t, 0.0)],
        [Complex64::new(0.5 * r * sin_t, 0.0), Complex64::new(0.5 * (1.0 - r * cos_t), 0.0)],
    ]
}

/// `Tr[(sin φ σ_x + cos φ σ_z) X]`.
fn project(x: &Mat, sin_p: f64, cos_p: f64) -> f64 {
    sin_p * (x[0][1] + x[1][0]).re + cos_p * (x[0][0] - x[1][1]).re
}

fn tr_z(x: &Mat) -> f64 {
    (x[0][0] - x[1][1]).re
}

/// Directional derivative `DH_ρ[X] = σ_zX + Xσ_z − 2Tr[σ_zX]ρ − 2Tr[σ_zρ]X`.
fn innovation_derivative(rho: &Mat, dir: &Mat) -> Mat {
    let tz_dir = tr_z(dir);
    let tz_rho = tr_z(rho);
    let mut out = [[zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let sz_i = if i == 0 { 1.0 } else { -1.0 };
            let sz_j = if j == 0 { 1.0 } else { -1.0 };
            out[i][j] = dir[i][j] * (sz_i + sz_j) - rho[i][j] * (2.0 * tz_dir) - dir[i][j] * (2.0 * tz_rho);
        }
    }
    out
}

/// Density-matrix route: coefficients from the dissipator `σ_zρσ_z − ρ` and
/// the innovation `H(ρ)`, projected with Pauli traces.
pub fn singular_step_rho(
    rho: &DensityMatrix,
    theta: f64,
    dw: f64,
    cfg: &StepConfig,
) -> Result<DensityMatrix> {
    rho.validate()?;
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise(dw));
    }
    let purity: f64 = rho.m.iter().flatten().map(|c| c.norm_sqr()).sum();
    let r = (2.0 * purity - 1.0).max(0.0).sqrt();
    let (sin_t, cos_t) = theta.sin_cos();
    check_radius(r, sin_t)?;
    let m = ray_state(r, sin_t, cos_t);

    let mut dissipator = [[zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let sign = if i == j { 0.0 } else { -2.0 };
            dissipator[i][j] = m[i][j] * sign;
        }
    }
    // H(ρ) = σ_zρ + ρσ_z − 2Tr[σ_zρ]ρ
    let mut h = [[zero(); 2]; 2];
    let tz = tr_z(&m);
    for i in 0..2 {
        for j in 0..2 {
            let sz_i = if i == 0 { 1.0 } else { -1.0 };
            let sz_j = if j == 0 { 1.0 } else { -1.0 };
            h[i][j] = m[i][j] * (sz_i + sz_j) - m[i][j] * (2.0 * tz);
        }
    }
    // dρ/dR along the ray
    let e_r = [
        [Complex64::new(0.5 * cos_t, 0.0), Complex64::new(0.5 * sin_t, 0.0)],
        [Complex64::new(0.5 * sin_t, 0.0), Complex64::new(-0.5 * cos_t, 0.0)],
    ];
    let dh = innovation_derivative(&m, &e_r);

    let a_r = project(&dissipator, sin_t, cos_t);
    let b_r = project(&h, sin_t, cos_t);
    // tangential axis: cos θ σ_x − sin θ σ_z
    let b_t = project(&h, cos_t, -sin_t);
    let slope = project(&dh, sin_t, cos_t);

    let tangential = if b_t == 0.0 { 0.0 } else { b_t * b_t / (2.0 * r) };
    let coeffs = RadialCoefficients {
        drift: a_r + tangential,
        noise: b_r,
        noise_slope: slope,
    };
    let next = radial_step(r, &coeffs, dw, cfg);
    Ok(DensityMatrix {
        m: ray_state(next, sin_t, cos_t),
    })
}
