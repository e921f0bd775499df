//! One-step integrators of the filtering SDE in the three coordinate systems.

use num_complex::Complex64;

use super::state::{check_entropy, BlochState, ControlValue, DensityMatrix, PurityState};
use super::{Scheme, StepConfig};
use crate::error::{Error, Result};

/// Upper clip applied to `s` before evaluating `∂b/∂s`, whose `1/√(1−s)` term
/// diverges at `s = 1`.
const MILSTEIN_S_MAX: f64 = 1.0 - 1e-12;

/// Drift of the linear entropy, `a(s, v) = −4s[1 − (1−s)v²]`.
pub fn drift_s(s: f64, v: ControlValue) -> Result<f64> {
    check_entropy(s)?;
    Ok(drift_unchecked(s, v.get()))
}

/// Diffusion coefficient of the linear entropy, `b(s, v) = −4s√(1−s)·v`.
pub fn diffusion_s(s: f64, v: ControlValue) -> Result<f64> {
    check_entropy(s)?;
    Ok(diffusion_unchecked(s, v.get()))
}

/// `∂b/∂s = −4v[√(1−s) − s/(2√(1−s))]`, evaluated one-sidedly near `s = 1`.
pub fn diffusion_s_derivative(s: f64, v: ControlValue) -> Result<f64> {
    check_entropy(s)?;
    Ok(diffusion_derivative_unchecked(s, v.get()))
}

#[inline]
pub(crate) fn drift_unchecked(s: f64, v: f64) -> f64 {
    -4.0 * s * (1.0 - (1.0 - s) * v * v)
}

#[inline]
pub(crate) fn diffusion_unchecked(s: f64, v: f64) -> f64 {
    -4.0 * s * (1.0 - s).max(0.0).sqrt() * v
}

#[inline]
fn diffusion_derivative_unchecked(s: f64, v: f64) -> f64 {
    let s = s.min(MILSTEIN_S_MAX);
    let r = (1.0 - s).sqrt();
    -4.0 * v * (r - 0.5 * s / r)
}

/// Milstein product `b·∂b/∂s = 16 s v² (1 − 3s/2)`. The `1/√(1−s)` in the
/// derivative cancels against `b`, so the product stays finite at `s = 1`.
#[inline]
fn milstein_product(s: f64, v: f64) -> f64 {
    16.0 * s * v * v * (1.0 - 1.5 * s)
}

/// Advances the linear entropy by one step. `s = 0` is absorbing and the
/// result is clipped to `[0, 1]`.
pub fn step_s(state: PurityState, v: ControlValue, dw: f64, cfg: &StepConfig) -> Result<PurityState> {
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise(dw));
    }
    check_entropy(state.s)?;
    Ok(PurityState {
        s: advance_s(state.s, v.get(), dw, cfg.dt, cfg.scheme),
        t: state.t + cfg.dt,
    })
}

/// Unchecked kernel shared by the ensemble loops.
#[inline]
pub(crate) fn advance_s(s: f64, v: f64, dw: f64, dt: f64, scheme: Scheme) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let mut next = s + drift_unchecked(s, v) * dt + diffusion_unchecked(s, v) * dw;
    if scheme == Scheme::Milstein {
        next += 0.5 * milstein_product(s, v) * (dw * dw - dt);
    }
    next.clamp(0.0, 1.0)
}

/// Bloch-vector form:
/// `dz = 2(1−z²)dW − Ωx dt`, `dx = −2x dt − 2zx dW + Ωz dt`, `y ≡ 0`.
pub fn step_bloch(state: &BlochState, omega: f64, dw: f64, cfg: &StepConfig) -> Result<BlochState> {
    if state.y != 0.0 {
        return Err(Error::InvalidState(format!(
            "Bloch integrator requires y = 0, got y = {}",
            state.y
        )));
    }
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise(dw));
    }
    let (x, z) = (state.x, state.z);
    let dt = cfg.dt;
    let (bx, bz) = (-2.0 * z * x, 2.0 * (1.0 - z * z));
    let mut nx = x + (-2.0 * x + omega * z) * dt + bx * dw;
    let mut nz = z - omega * x * dt + bz * dw;
    if cfg.scheme == Scheme::Milstein {
        // (b·∇)b for the single noise channel
        let lx = bx * (-2.0 * z) + bz * (-2.0 * x);
        let lz = bz * (-4.0 * z);
        let q = 0.5 * (dw * dw - dt);
        nx += lx * q;
        nz += lz * q;
    }
    Ok(BlochState { x: nx, y: 0.0, z: nz }.clip_norm())
}

/// Whether a density-matrix step needed its positivity repaired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityRepair {
    None,
    EigenvalueClipped,
}

type Mat = [[Complex64; 2]; 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn mat_add(a: &Mat, b: &Mat, scale: f64) -> Mat {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += b[i][j] * scale;
        }
    }
    out
}

/// `σ_z X + X σ_z`.
fn anticommute_z(x: &Mat) -> Mat {
    [
        [x[0][0] * 2.0, Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), -x[1][1] * 2.0],
    ]
}

fn trace_z(x: &Mat) -> f64 {
    (x[0][0] - x[1][1]).re
}

/// Innovation term `H(ρ) = σ_zρ + ρσ_z − 2Tr[σ_zρ]ρ`.
fn innovation(rho: &Mat) -> Mat {
    mat_add(&anticommute_z(rho), rho, -2.0 * trace_z(rho))
}

/// Directional derivative of `H` at `ρ` along `X`.
fn innovation_derivative(rho: &Mat, x: &Mat) -> Mat {
    let out = mat_add(&anticommute_z(x), rho, -2.0 * trace_z(x));
    mat_add(&out, x, -2.0 * trace_z(rho))
}

/// Deterministic part `−iΩ[σ_y/2, ρ] + σ_zρσ_z − ρ`.
fn drift_rho(rho: &Mat, omega: f64) -> Mat {
    // σ_y = [[0, −i], [i, 0]]
    let sy = [[Complex64::new(0.0, 0.0), -I], [I, Complex64::new(0.0, 0.0)]];
    let mut comm = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                comm[i][j] += sy[i][k] * rho[k][j] - rho[i][k] * sy[k][j];
            }
        }
    }
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            // σ_z ρ σ_z flips the sign of the off-diagonals
            let sign = if i == j { 1.0 } else { -1.0 };
            out[i][j] = -I * omega * 0.5 * comm[i][j] + rho[i][j] * sign - rho[i][j];
        }
    }
    out
}

/// Restores Hermiticity and unit trace; clips negative eigenvalues that exceed
/// round-off.
pub(crate) fn repair(m: Mat) -> (DensityMatrix, PositivityRepair) {
    let off = 0.5 * (m[0][1] + m[1][0].conj());
    let mut a = m[0][0].re;
    let mut d = m[1][1].re;
    let tr = a + d;
    a /= tr;
    d /= tr;
    let off = off / tr;
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + off.norm_sqr()).sqrt();
    let lo = mean - rad;
    if lo < -10.0 * f64::EPSILON {
        // clip to the nearest boundary state: same eigenvectors, eigenvalues (1, 0)
        let scale = if rad > 0.0 { 0.5 / rad } else { 0.0 };
        let ha = 0.5 * (a - d) * scale;
        let off = off * scale;
        let rho = DensityMatrix {
            m: [
                [Complex64::new(0.5 + ha, 0.0), off],
                [off.conj(), Complex64::new(0.5 - ha, 0.0)],
            ],
        };
        return (rho, PositivityRepair::EigenvalueClipped);
    }
    (
        DensityMatrix {
            m: [
                [Complex64::new(a, 0.0), off],
                [off.conj(), Complex64::new(d, 0.0)],
            ],
        },
        PositivityRepair::None,
    )
}

/// One step of the density-matrix filtering equation
/// `dρ = −iΩ[σ_y/2, ρ]dt + (σ_zρσ_z − ρ)dt + H(ρ)dW`.
pub fn step_rho(
    rho: &DensityMatrix,
    omega: f64,
    dw: f64,
    cfg: &StepConfig,
) -> Result<(DensityMatrix, PositivityRepair)> {
    rho.validate()?;
    if !dw.is_finite() {
        return Err(Error::NonFiniteNoise(dw));
    }
    let m = &rho.m;
    let h = innovation(m);
    let mut next = mat_add(m, &drift_rho(m, omega), cfg.dt);
    next = mat_add(&next, &h, dw);
    if cfg.scheme == Scheme::Milstein {
        let lh = innovation_derivative(m, &h);
        next = mat_add(&next, &lh, 0.5 * (dw * dw - cfg.dt));
    }
    Ok(repair(next))
}

/// Measurement-record increment `dY = 2z dt + dW`.
pub fn measurement_increment(z: f64, dw: f64, dt: f64) -> f64 {
    2.0 * z * dt + dw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::noise::{BrownianPath, NoiseStream};
    use crate::sde::state::PolarState;

    fn v(x: f64) -> ControlValue {
        ControlValue::new(x).unwrap()
    }

    #[test]
    fn drift_examples() {
        assert_eq!(drift_s(0.0, v(0.7)).unwrap(), 0.0);
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(drift_s(s, v(0.0)).unwrap(), -4.0 * s);
        }
        assert!((drift_s(0.5, v(1.0)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(diffusion_s(0.3, v(0.0)).unwrap(), 0.0);
        assert_eq!(diffusion_s(1.0, v(0.6)).unwrap(), 0.0);
        assert!((diffusion_s(0.5, v(1.0)).unwrap() + 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!((diffusion_s(0.5, v(1.0)).unwrap() + std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn coefficient_domain_errors() {
        assert!(drift_s(1.2, v(0.0)).is_err());
        assert!(diffusion_s(-0.1, v(0.0)).is_err());
        assert!(ControlValue::new(1.5).is_err());
        assert!(ControlValue::new(f64::NAN).is_err());
    }

    #[test]
    fn diffusion_derivative_matches_finite_difference() {
        for &s in &[0.1, 0.4, 0.8] {
            for &u in &[-1.0, 0.3, 1.0] {
                let h = 1e-6;
                let fd = (diffusion_unchecked(s + h, u) - diffusion_unchecked(s - h, u)) / (2.0 * h);
                let an = diffusion_s_derivative(s, v(u)).unwrap();
                assert!((fd - an).abs() < 1e-7, "s={s} u={u} fd={fd} an={an}");
            }
        }
        assert!(diffusion_s_derivative(1.0, v(1.0)).unwrap().is_finite());
    }

    #[test]
    fn deterministic_step_without_control() {
        let cfg = StepConfig::euler(0.001).unwrap();
        let st = PurityState::new(0.9, 0.0).unwrap();
        for dw in [-0.3, 0.0, 0.05] {
            let next = step_s(st, v(0.0), dw, &cfg).unwrap();
            assert!((next.s - 0.8964).abs() < 1e-15);
            assert!((next.t - 0.001).abs() < 1e-18);
        }
    }

    #[test]
    fn pure_state_is_absorbing() {
        let cfg = StepConfig::milstein(0.01).unwrap();
        let st = PurityState::new(0.0, 0.0).unwrap();
        assert_eq!(step_s(st, v(0.8), 0.2, &cfg).unwrap().s, 0.0);
    }

    #[test]
    fn milstein_equals_euler_without_noise_term() {
        let e = StepConfig::euler(0.01).unwrap();
        let m = StepConfig::milstein(0.01).unwrap();
        let st = PurityState::new(0.6, 0.0).unwrap();
        let a = step_s(st, v(0.0), 0.13, &e).unwrap();
        let b = step_s(st, v(0.0), 0.13, &m).unwrap();
        assert_eq!(a.s.to_bits(), b.s.to_bits());
    }

    #[test]
    fn step_s_rejects_non_finite_noise() {
        let cfg = StepConfig::euler(0.01).unwrap();
        let st = PurityState::new(0.6, 0.0).unwrap();
        assert!(matches!(
            step_s(st, v(1.0), f64::INFINITY, &cfg),
            Err(Error::NonFiniteNoise(_))
        ));
        assert!(StepConfig::euler(0.0).is_err());
    }

    #[test]
    fn step_s_clips_into_unit_interval() {
        let cfg = StepConfig::euler(0.01).unwrap();
        let st = PurityState::new(0.99, 0.0).unwrap();
        let up = step_s(st, v(1.0), -1.0, &cfg).unwrap();
        assert_eq!(up.s, 1.0);
    }

    #[test]
    fn bloch_examples() {
        let cfg = StepConfig::euler(0.001).unwrap();
        let origin = BlochState::new(0.0, 0.0).unwrap();
        let n = step_bloch(&origin, 0.0, 0.01, &cfg).unwrap();
        assert!((n.z - 0.02).abs() < 1e-15 && n.x == 0.0);

        let up = BlochState::new(0.0, 1.0).unwrap();
        for dw in [-0.1, 0.0, 0.2] {
            let n = step_bloch(&up, 0.0, dw, &cfg).unwrap();
            assert_eq!((n.x, n.z), (0.0, 1.0));
        }

        let ex = BlochState::new(1.0, 0.0).unwrap();
        let n = step_bloch(&ex, 0.0, 0.0, &cfg).unwrap();
        assert!((n.x - 0.998).abs() < 1e-15 && n.z == 0.0);
    }

    #[test]
    fn bloch_rejects_out_of_plane_states() {
        let cfg = StepConfig::euler(0.001).unwrap();
        let b = BlochState::with_y(0.1, 0.1, 0.1).unwrap();
        assert!(step_bloch(&b, 0.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn rho_fixed_points() {
        let cfg = StepConfig::milstein(0.01).unwrap();
        let g = DensityMatrix::ground();
        for dw in [-0.2, 0.0, 0.3] {
            let (n, _) = step_rho(&g, 0.0, dw, &cfg).unwrap();
            assert!((n.m[0][0].re - 1.0).abs() < 1e-15 && n.m[0][1].norm() < 1e-15);
        }
        let mixed = DensityMatrix::maximally_mixed();
        let (n, rep) = step_rho(&mixed, 0.0, 0.0, &StepConfig::euler(0.01).unwrap()).unwrap();
        assert_eq!(rep, PositivityRepair::None);
        for i in 0..2 {
            for j in 0..2 {
                assert!((n.m[i][j] - mixed.m[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rho_step_is_the_bloch_step() {
        // ρ = (I + xσ_x + zσ_z)/2 is affine in the Bloch vector, so both
        // integrators must agree to round-off for either scheme.
        for scheme in [Scheme::EulerMaruyama, Scheme::Milstein] {
            let cfg = StepConfig::new(1e-3, scheme).unwrap();
            let mut rho = PolarState::new(0.6, 1.1).unwrap().to_bloch().to_density();
            let mut b = rho.to_bloch();
            let mut stream = NoiseStream::new(11, 0);
            let path = BrownianPath::sample(&mut stream, cfg.dt, 500);
            for (k, &dw) in path.increments.iter().enumerate() {
                let omega = 3.0 * (k as f64 * 0.01).sin();
                rho = step_rho(&rho, omega, dw, &cfg).unwrap().0;
                b = step_bloch(&b, omega, dw, &cfg).unwrap();
                let rb = rho.to_bloch();
                assert!((rb.z - b.z).abs() < 1e-12 && (rb.x - b.x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_invariants_hold_after_every_step() {
        let cfg = StepConfig::euler(0.05).unwrap();
        let mut rho = PolarState::new(0.999, 0.3).unwrap().to_bloch().to_density();
        let mut stream = NoiseStream::new(5, 1);
        let mut repairs = 0;
        for _ in 0..2_000 {
            let dw = stream.increment(cfg.dt);
            let (n, rep) = step_rho(&rho, 1.0, dw, &cfg).unwrap();
            if rep == PositivityRepair::EigenvalueClipped {
                repairs += 1;
            }
            n.validate().unwrap();
            rho = n;
        }
        // coarse Euler steps near the pure boundary must have triggered a repair
        assert!(repairs > 0);
    }

    #[test]
    fn measurement_increment_examples() {
        assert_eq!(measurement_increment(0.0, 0.123, 0.01), 0.123);
        assert!((measurement_increment(1.0, 0.0, 0.01) - 0.02).abs() < 1e-15);
        assert!((measurement_increment(-1.0, 0.05, 0.01) - 0.03).abs() < 1e-15);
    }
}
