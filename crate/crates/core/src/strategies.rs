//! Markov feedback strategies, terminal costs and the closed-form predictions
//! for the two reference strategies.
//!
//! * Holding `u = 0` keeps the Bloch vector on the equator. The entropy then
//!   decays deterministically, `S_t = S_0 e^{−4t}`.
//! * Holding `u = 1` keeps it on the measurement axis. The mean time to reach
//!   entropy `h` from `s` is `[γ(h) − γ(s)]/4`, with
//!   `γ(x) = √(1−x) atanh √(1−x)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sde::{state_check_entropy, ControlValue};

/// A Markov control law `(t, s) ↦ v`.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// `u ≡ 0`.
    Jacobs,
    /// `u ≡ 1`.
    MinTime,
    Constant(ControlValue),
    Tabulated(PolicyTable),
    /// Finite rotation rate `Ω = gain·(θ_target − θ)` driving the Bloch angle.
    /// Its direct-control limit is `u = cos θ_target`.
    FiniteOmega { gain: f64, theta_target: f64 },
}

impl Strategy {
    pub fn evaluate(&self, t: f64, s: f64) -> ControlValue {
        match self {
            Strategy::Jacobs => ControlValue::ZERO,
            Strategy::MinTime => ControlValue::ONE,
            Strategy::Constant(v) => *v,
            Strategy::Tabulated(table) => table.evaluate(t, s),
            Strategy::FiniteOmega { theta_target, .. } => {
                ControlValue::saturating(theta_target.cos())
            }
        }
    }

    /// Bloch angle realising the strategy, when it is a constant angle.
    pub fn target_angle(&self) -> Option<f64> {
        match self {
            Strategy::Jacobs => Some(FRAC_PI_2),
            Strategy::MinTime => Some(0.0),
            Strategy::Constant(v) => Some(v.angle()),
            Strategy::FiniteOmega { theta_target, .. } => Some(*theta_target),
            Strategy::Tabulated(_) => None,
        }
    }

    /// Rotation rate for the finite-gain strategy; zero for the others.
    pub fn omega(&self, theta: f64) -> f64 {
        match self {
            Strategy::FiniteOmega { gain, theta_target } => gain * wrap_angle(theta_target - theta),
            _ => 0.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Strategy::Jacobs => "jacobs".into(),
            Strategy::MinTime => "mintime".into(),
            Strategy::Constant(v) => format!("constant:{}", v.get()),
            Strategy::Tabulated(_) => "tabulated".into(),
            Strategy::FiniteOmega { gain, theta_target } => format!("omega:{gain}:{theta_target}"),
        }
    }
}

/// Maps an angle into `(−π, π]`.
fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Piecewise-constant policy on a time × entropy grid. Rows are time nodes,
/// columns are entropy nodes. A query uses the last time row not after `t`
/// and the nearest entropy column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub times: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PolicyTable {
    pub fn new(times: Vec<f64>, s_grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let bad = |m: &str| Err(Error::PolicyTable(m.to_string()));
        if times.is_empty() || s_grid.is_empty() {
            return bad("empty grid");
        }
        if !times.windows(2).all(|w| w[0] < w[1]) || !s_grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("grid nodes must be strictly increasing");
        }
        if values.len() != times.len() || values.iter().any(|row| row.len() != s_grid.len()) {
            return bad("value array does not match the grid shape");
        }
        if values.iter().flatten().any(|v| !(v.is_finite() && v.abs() <= 1.0)) {
            return bad("control values must lie in [-1, 1]");
        }
        Ok(PolicyTable {
            times,
            s_grid,
            values,
        })
    }

    pub fn evaluate(&self, t: f64, s: f64) -> ControlValue {
        let row = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        let k = self.s_grid.partition_point(|&x| x < s);
        let col = if k == 0 {
            0
        } else if k == self.s_grid.len() || s - self.s_grid[k - 1] <= self.s_grid[k] - s {
            k - 1
        } else {
            k
        };
        ControlValue::saturating(self.values[row][col])
    }

    /// Reads the layout written by [`PolicyTable::write_csv`]: a header
    /// `t,<s_0>,<s_1>,…` followed by one row per time node.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        let parse = |x: &str| -> Result<f64> {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::PolicyTable(format!("not a number: {x:?}")))
        };
        if header.len() < 2 {
            return Err(Error::PolicyTable("header needs a time column and entropy columns".into()));
        }
        let s_grid = header.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut fields = rec.iter();
            times.push(parse(fields.next().unwrap_or(""))?);
            values.push(fields.map(parse).collect::<Result<Vec<_>>>()?);
        }
        PolicyTable::new(times, s_grid, values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.s_grid.iter().map(|s| format!("{s}")));
        w.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.values) {
            let mut rec = vec![format!("{t}")];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalCost {
    /// `F(x) = x`.
    LinearEntropy,
    /// `F(x) = −√(1−x)`, minus the Bloch radius.
    NegSqrtPurity,
}

impl TerminalCost {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TerminalCost::LinearEntropy => x,
            TerminalCost::NegSqrtPurity => -(1.0 - x).max(0.0).sqrt(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            TerminalCost::LinearEntropy => 1.0,
            TerminalCost::NegSqrtPurity => 0.5 / (1.0 - x).sqrt(),
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            TerminalCost::LinearEntropy => 0.0,
            TerminalCost::NegSqrtPurity => 0.25 / (1.0 - x).powf(1.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TerminalCost::LinearEntropy => "linear",
            TerminalCost::NegSqrtPurity => "negsqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    Terminal(f64),
    Threshold(f64),
}

impl Horizon {
    pub fn terminal(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Horizon::Terminal(t))
        } else {
            Err(Error::domain("T", t, "(0, inf)"))
        }
    }

    pub fn threshold(h: f64) -> Result<Self> {
        check_threshold(h)?;
        Ok(Horizon::Threshold(h))
    }
}

pub(crate) fn check_threshold(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("h", h, "(0, 1)"))
    }
}

/// `γ(x) = √(1−x)·atanh(√(1−x))` on `(0, 1]`.
///
/// Evaluated as `r·[ln(1+r) − ½ ln x]` with `r = √(1−x)`, which follows from
/// `1 − r = x/(1+r)` and avoids the cancellation in `(1+r)/(1−r)` for small `x`.
pub fn gamma(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Divergence);
    }
    if !(x.is_finite() && x > 0.0 && x <= 1.0) {
        return Err(Error::domain("x", x, "(0, 1]"));
    }
    let r = (1.0 - x).sqrt();
    Ok(r * (r.ln_1p() - 0.5 * x.ln()))
}

/// Entropy along the `u = 0` path, `s0·e^{−4t}`.
pub fn jacobs_entropy(s0: f64, t: f64) -> Result<f64> {
    state_check_entropy(s0)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::domain("t", t, "[0, inf)"));
    }
    Ok(s0 * (-4.0 * t).exp())
}

/// `F(s0·e^{−4T})`; exact because the `u = 0` path is deterministic.
pub fn jacobs_expected_cost(s0: f64, horizon: f64, cost: TerminalCost) -> Result<f64> {
    Ok(cost.eval(jacobs_entropy(s0, horizon)?))
}

/// Mean first time the entropy reaches `h` under `u = 1`.
pub fn min_time_hitting_time(s0: f64, h: f64) -> Result<f64> {
    check_threshold(h)?;
    state_check_entropy(s0)?;
    if s0 <= h {
        return Ok(0.0);
    }
    Ok((gamma(h)? - gamma(s0)?) / 4.0)
}

/// Crossing time of the deterministic `u = 0` path, `¼ ln(s0/h)`.
pub fn jacobs_hitting_time(s0: f64, h: f64) -> Result<f64> {
    check_threshold(h)?;
    state_check_entropy(s0)?;
    if s0 <= h {
        return Ok(0.0);
    }
    Ok(0.25 * (s0 / h).ln())
}
