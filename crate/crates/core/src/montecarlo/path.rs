//! Single-trajectory driver shared by all ensemble operations.

use crate::error::{Error, Result};
use crate::sde::{
    advance_s, bloch_from_entropy, diffusion_unchecked, drift_unchecked, measurement_increment, step_bloch,
    BlochState, Channel, NoiseStream, StepConfig, TrajectorySample,
};
use crate::strategies::Strategy;

use super::{CrossingDetection, EnsembleConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop {
    At(f64),
    Threshold { h: f64, cutoff: f64 },
}

/// One completed step as seen by an observer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepView {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub dw: f64,
    pub dt: f64,
}

impl StepView {
    pub fn sample(&self) -> TrajectorySample {
        let z = (1.0 - self.s).max(0.0).sqrt() * self.v;
        TrajectorySample {
            t: self.t,
            s: self.s,
            v: self.v,
            dw: self.dw,
            dy: measurement_increment(z, self.dw, self.dt),
        }
    }

    pub fn drift(&self) -> f64 {
        drift_unchecked(self.s, self.v)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub s: f64,
    pub t: f64,
    pub hit: Option<f64>,
}

/// Direct control integrates the entropy; finite-gain strategies integrate
/// the Bloch vector with an explicit rotation rate.
enum Engine {
    Entropy(f64),
    Bloch(BlochState),
}

impl Engine {
    fn new(strategy: &Strategy, cfg: &EnsembleConfig) -> Result<Self> {
        match strategy {
            Strategy::FiniteOmega { gain, theta_target } => {
                if !(gain.is_finite() && *gain >= 0.0) {
                    return Err(Error::domain("gain", *gain, "[0, inf)"));
                }
                if gain * cfg.dt > 1.0 {
                    return Err(Error::Config(format!(
                        "gain * dt = {} exceeds 1; reduce dt",
                        gain * cfg.dt
                    )));
                }
                let theta0 = cfg.theta0.unwrap_or(*theta_target);
                Ok(Engine::Bloch(bloch_from_entropy(cfg.s0, theta0)?))
            }
            _ => Ok(Engine::Entropy(cfg.s0)),
        }
    }

    fn entropy(&self) -> f64 {
        match self {
            Engine::Entropy(s) => *s,
            Engine::Bloch(b) => b.entropy().clamp(0.0, 1.0),
        }
    }

    /// Control in effect over the coming step.
    fn control(&self, strategy: &Strategy, t: f64) -> f64 {
        match self {
            Engine::Entropy(s) => strategy.evaluate(t, *s).get(),
            Engine::Bloch(b) => {
                let r = b.norm();
                if r > 0.0 {
                    b.z / r
                } else {
                    1.0
                }
            }
        }
    }

    fn step(&mut self, strategy: &Strategy, v: f64, dw: f64, dt: f64, cfg: &EnsembleConfig) -> Result<()> {
        match self {
            Engine::Entropy(s) => *s = advance_s(*s, v, dw, dt, cfg.scheme),
            Engine::Bloch(b) => {
                let omega = strategy.omega(b.to_polar().theta);
                *b = step_bloch(b, omega, dw, &StepConfig::new(dt, cfg.scheme)?)?;
            }
        }
        Ok(())
    }
}

/// Integrates trajectory `index` until `stop`, calling `observe` after every
/// step.
pub(crate) fn drive<F>(strategy: &Strategy, cfg: &EnsembleConfig, index: u64, stop: Stop, mut observe: F) -> Result<Outcome>
where
    F: FnMut(&StepView) -> Result<()>,
{
    let mut engine = Engine::new(strategy, cfg)?;
    let mut noise = NoiseStream::new(cfg.seed, index);
    let mut aux: Option<NoiseStream> = None;
    let dt = cfg.dt;

    let (horizon, threshold) = match stop {
        Stop::At(t) => (t, None),
        Stop::Threshold { h, cutoff } => (cutoff, Some(h)),
    };
    if let Some(h) = threshold {
        if engine.entropy() <= h {
            return Ok(Outcome {
                s: engine.entropy(),
                t: 0.0,
                hit: Some(0.0),
            });
        }
    }
    let full = (horizon / dt + 1e-9).floor() as u64;
    let rest = horizon - full as f64 * dt;
    let extra = rest > 1e-12 * horizon.max(1.0);
    let total = full + u64::from(extra);

    let mut t = 0.0;
    for k in 0..total {
        let h_step = if k < full { dt } else { rest };
        let s = engine.entropy();
        let v = engine.control(strategy, t);
        let dw = noise.increment(h_step);
        if !dw.is_finite() {
            return Err(Error::NonFiniteNoise(dw));
        }
        engine.step(strategy, v, dw, h_step, cfg)?;
        let s_next = engine.entropy();
        observe(&StepView {
            t,
            s,
            v,
            dw,
            dt: h_step,
        })?;
        if let Some(h) = threshold {
            if s_next <= h {
                let frac = (s - h) / (s - s_next);
                return Ok(Outcome {
                    s: s_next,
                    t: t + h_step,
                    hit: Some(t + h_step * frac),
                });
            }
            if cfg.crossing == CrossingDetection::BridgeCorrected {
                let b = diffusion_unchecked(s, v);
                if b != 0.0 {
                    let p = (-2.0 * (s - h) * (s_next - h) / (b * b * h_step)).exp();
                    if p > 0.0 {
                        let u = aux
                            .get_or_insert_with(|| NoiseStream::with_channel(cfg.seed, index, Channel::Auxiliary))
                            .uniform();
                        if u < p {
                            return Ok(Outcome {
                                s: s_next,
                                t: t + h_step,
                                hit: Some(t + 0.5 * h_step),
                            });
                        }
                    }
                }
            }
        }
        t = if k < full { (k + 1) as f64 * dt } else { horizon };
    }
    Ok(Outcome {
        s: engine.entropy(),
        t: horizon,
        hit: None,
    })
}
