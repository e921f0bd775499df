use std::io::Write;

use serde::{Deserialize, Serialize};

use super::state::PurityState;
use crate::error::Result;

/// One integration step: state and control at the start of the step, the
/// innovation increment over it, and the matching record increment
/// `dY = 2z dt + dW` with `z = √(1−s)·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    pub dw: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<TrajectorySample>,
    pub terminal: PurityState,
    pub hitting_time: Option<f64>,
}

impl TrajectoryRecord {
    pub const CSV_HEADER: [&'static str; 5] = ["t", "s", "v", "dW", "dY"];

    /// Writes `t,s,v,dW,dY` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for smp in &self.samples {
            w.write_record([smp.t, smp.s, smp.v, smp.dw, smp.dy].map(fmt17))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest violation of the record relation over the stored samples.
    pub fn record_residual(&self, dt: f64) -> f64 {
        self.samples
            .iter()
            .map(|smp| {
                let z = (1.0 - smp.s).max(0.0).sqrt() * smp.v;
                (smp.dy - (2.0 * z * dt + smp.dw)).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
