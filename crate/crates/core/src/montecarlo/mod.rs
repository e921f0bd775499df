//! Ensembles of entropy trajectories: expected terminal cost, first-passage
//! times, Dynkin-formula checks, strategy comparison and cross-coordinate
//! validation.
//!
//! Trajectory `i` of a run with master seed `m` always draws its Wiener
//! increments from `NoiseStream::new(m, i)`. Trajectories are simulated in
//! parallel but collected and reduced in index order, so a summary depends
//! only on the configuration, never on the worker count.

mod compare;
mod crossval;
mod dynkin;
mod path;

pub use compare::{compare_strategies, ComparisonReport, Goal, PairwiseDifference, RankedEntry};
pub use crossval::{
    cross_validate, singular_limit_probe, CrossValidationReport, ProbeGoal, ProbeRow, ProbeTable,
    RotationMode,
};
pub use dynkin::{dynkin_check, DynkinReport};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sde::{state_check_entropy, Scheme, TrajectoryRecord};
use crate::strategies::{check_threshold, min_time_hitting_time, Horizon, Strategy, TerminalCost};
use path::{drive, Stop};

/// Censored fractions above this abort a first-passage run.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

/// Default cutoff as a multiple of the analytic `u = 1` mean passage time.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 20.0;

/// How a first crossing of the threshold is detected on the discrete path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CrossingDetection {
    /// Only sign changes across a step count, located by linear interpolation.
    Interpolate,
    /// Also counts excursions below the threshold inside a step, with the
    /// Brownian-bridge probability `exp(−2(s₀−h)(s₁−h)/(b²Δt))` using the
    /// diffusion coefficient at the start of the step.
    #[default]
    BridgeCorrected,
}

/// Ensemble settings. [`EnsembleConfig::new`] defaults to the Milstein
/// scheme: Euler steps carry an `O(√dt)` weak bias from the square-root
/// diffusion at `s = 1`, which the `u = 1` strategy visits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub s0: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub horizon: Horizon,
    /// First-passage runs stop each trajectory here. `None` means
    /// [`DEFAULT_CUTOFF_FACTOR`] times the analytic `u = 1` mean.
    pub cutoff: Option<f64>,
    pub crossing: CrossingDetection,
    /// Initial Bloch angle for finite-gain strategies; `None` starts on the
    /// target angle.
    pub theta0: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(n_traj: usize, s0: f64, dt: f64, horizon: Horizon) -> Self {
        EnsembleConfig {
            n_traj,
            s0,
            dt,
            scheme: Scheme::Milstein,
            seed: 0,
            horizon,
            cutoff: None,
            crossing: CrossingDetection::default(),
            theta0: None,
            workers: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        state_check_entropy(self.s0)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::domain("dt", self.dt, "(0, inf)"));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match self.horizon {
            Horizon::Terminal(t) if !(t.is_finite() && t >= 0.0) => {
                return Err(Error::domain("T", t, "[0, inf)"))
            }
            Horizon::Threshold(h) => {
                check_threshold(h)?;
                if let Some(c) = self.cutoff {
                    let floor = 10.0 * min_time_hitting_time(self.s0, h)?;
                    if !(c.is_finite() && c > floor) {
                        return Err(Error::Config(format!(
                            "cutoff {c} must exceed 10x the analytic mean passage time ({floor})"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolved first-passage cutoff.
    pub fn cutoff_time(&self, h: f64) -> Result<f64> {
        match self.cutoff {
            Some(c) => Ok(c),
            None => Ok(DEFAULT_CUTOFF_FACTOR * min_time_hitting_time(self.s0, h)?),
        }
    }

    fn stop(&self) -> Result<Stop> {
        Ok(match self.horizon {
            Horizon::Terminal(t) => Stop::At(t),
            Horizon::Threshold(h) => Stop::Threshold {
                h,
                cutoff: self.cutoff_time(h)?,
            },
        })
    }
}

/// Mean with its standard error and 95% half-width `1.96·stderr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub estimate: f64,
    pub stderr: f64,
    pub ci95: f64,
    pub n: usize,
    pub censored: usize,
}

impl EnsembleSummary {
    pub fn from_samples(samples: &[f64], censored: usize) -> Self {
        let n = samples.len();
        // shifting by the first sample keeps constant samples exact
        let shift = samples.first().copied().unwrap_or(0.0);
        let mean = shift + samples.iter().map(|x| x - shift).sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let stderr = (var / n as f64).sqrt();
        EnsembleSummary {
            estimate: mean,
            stderr,
            ci95: 1.96 * stderr,
            n,
            censored,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.ci95
    }
}

/// Runs `f` on a pool of `workers` threads, or the global pool.
pub(crate) fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `F(S_T)` for every trajectory, in index order.
pub fn terminal_samples(strategy: &Strategy, cost: TerminalCost, cfg: &EnsembleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let Horizon::Terminal(_) = cfg.horizon else {
        return Err(Error::Config("expected-cost runs need a terminal time".into()));
    };
    let stop = cfg.stop()?;
    in_pool(cfg.workers, || {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| Ok(cost.eval(drive(strategy, cfg, i as u64, stop, |_| Ok(()))?.s)))
            .collect()
    })?
}

/// Estimates `J[u, s0] = E F(S_T)`.
pub fn run_ensemble(strategy: &Strategy, cost: TerminalCost, cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    Ok(EnsembleSummary::from_samples(&terminal_samples(strategy, cost, cfg)?, 0))
}

/// Per-trajectory first-passage times. Censored trajectories carry the cutoff
/// time and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageSample {
    pub times: Vec<f64>,
    pub censored: Vec<bool>,
    pub cutoff: f64,
}

impl PassageSample {
    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }

    /// Summary over the full sample, censored values included as the cutoff.
    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary::from_samples(&self.times, self.censored_count())
    }

    /// Errors when more than [`MAX_CENSORED_FRACTION`] of the sample is censored.
    pub fn check_censoring(&self) -> Result<()> {
        let c = self.censored_count();
        if c as f64 > MAX_CENSORED_FRACTION * self.times.len() as f64 {
            return Err(Error::Censored {
                censored: c,
                total: self.times.len(),
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }

    /// Histogram as `left,right,count` rows over `[0, max]`.
    pub fn write_histogram<W: Write>(&self, bins: usize, out: W) -> Result<()> {
        let bins = bins.max(1);
        let hi = self.times.iter().copied().fold(0.0, f64::max);
        let width = if hi > 0.0 { hi / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &t in &self.times {
            let k = ((t / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["left", "right", "count"])?;
        for (k, c) in counts.iter().enumerate() {
            w.write_record([
                format!("{:.16e}", k as f64 * width),
                format!("{:.16e}", (k + 1) as f64 * width),
                c.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First-passage times `τ = inf{t : S_t ≤ h}` for every trajectory.
pub fn passage_times(strategy: &Strategy, cfg: &EnsembleConfig) -> Result<PassageSample> {
    cfg.validate()?;
    let Horizon::Threshold(h) = cfg.horizon else {
        return Err(Error::Config("first-passage runs need a threshold".into()));
    };
    let cutoff = cfg.cutoff_time(h)?;
    if cfg.s0 <= h {
        return Ok(PassageSample {
            times: vec![0.0; cfg.n_traj],
            censored: vec![false; cfg.n_traj],
            cutoff,
        });
    }
    let stop = cfg.stop()?;
    let outcomes: Vec<(f64, bool)> = in_pool(cfg.workers, || {
        (0..cfg.n_traj)
            .into_par_iter()
            .map(|i| {
                let o = drive(strategy, cfg, i as u64, stop, |_| Ok(()))?;
                Ok(match o.hit {
                    Some(t) => (t, false),
                    None => (cutoff, true),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let (times, censored) = outcomes.into_iter().unzip();
    Ok(PassageSample {
        times,
        censored,
        cutoff,
    })
}

/// Mean first-passage time to `h`, refusing runs where more than
/// [`MAX_CENSORED_FRACTION`] of trajectories reach the cutoff.
pub fn estimate_hitting_time(strategy: &Strategy, cfg: &EnsembleConfig) -> Result<EnsembleSummary> {
    let sample = passage_times(strategy, cfg)?;
    sample.check_censoring()?;
    Ok(sample.summary())
}

/// Full record of trajectory `index`: state and control at each step start,
/// with the innovation and measurement-record increments.
pub fn simulate_trajectory(strategy: &Strategy, cfg: &EnsembleConfig, index: u64) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let mut samples = Vec::new();
    let o = drive(strategy, cfg, index, cfg.stop()?, |st| {
        samples.push(st.sample());
        Ok(())
    })?;
    Ok(TrajectoryRecord {
        samples,
        terminal: crate::sde::PurityState { s: o.s, t: o.t },
        hitting_time: o.hit,
    })
}
