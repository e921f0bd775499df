//! Flat `key = value` run configuration.
//!
//! A file holds one assignment per line; `#` starts a comment. Command-line
//! overrides use the same syntax and win over the file. The echo written next
//! to every result lists every key, defaults included, and parses back to the
//! same configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{CrossingDetection, RotationMode};
use crate::sde::{ControlValue, Scheme};
use crate::strategies::{PolicyTable, Strategy, TerminalCost};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Hit,
    Verify,
    Solve,
    Compare,
    Crossval,
    Probe,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Hit,
        Command::Verify,
        Command::Solve,
        Command::Compare,
        Command::Crossval,
        Command::Probe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Hit => "hit",
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Compare => "compare",
            Command::Crossval => "crossval",
            Command::Probe => "probe",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which of the two control problems a command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    Finite,
    Hitting,
}

/// A strategy as written in a config: `jacobs`, `mintime`, `constant:<u>`,
/// `omega:<gain>:<theta>` or `table:<csv path>`. `auto` lets the command
/// pick; `verify` uses the strategy that belongs to the value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec(pub String);

impl StrategySpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec = StrategySpec(text.trim().to_string());
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let parts: Vec<&str> = self.0.split(':').collect();
        match parts.as_slice() {
            ["jacobs"] | ["mintime"] | ["auto"] => Ok(()),
            ["constant", u] => ControlValue::new(parse_f64("constant", u)?).map(|_| ()),
            ["omega", g, th] => {
                let g = parse_f64("gain", g)?;
                parse_f64("theta", th)?;
                if g < 0.0 {
                    return Err(Error::domain("gain", g, "[0, inf)"));
                }
                Ok(())
            }
            ["table", path] if !path.is_empty() => Ok(()),
            _ => Err(Error::Config(format!(
                "strategy '{}' is not one of jacobs, mintime, constant:<u>, omega:<gain>:<theta>, table:<path>",
                self.0
            ))),
        }
    }

    /// Builds the strategy, reading a policy table from disk if needed.
    pub fn build(&self) -> Result<Strategy> {
        let parts: Vec<&str> = self.0.split(':').collect();
        Ok(match parts.as_slice() {
            ["jacobs"] => Strategy::Jacobs,
            ["mintime"] => Strategy::MinTime,
            ["constant", u] => Strategy::Constant(ControlValue::new(parse_f64("constant", u)?)?),
            ["omega", g, th] => Strategy::FiniteOmega {
                gain: parse_f64("gain", g)?,
                theta_target: parse_f64("theta", th)?,
            },
            ["table", path] => Strategy::Tabulated(PolicyTable::from_path(std::path::Path::new(path))?),
            ["auto"] => return Err(Error::Config("strategy 'auto' is only meaningful for verify".into())),
            _ => return Err(Error::Config(format!("bad strategy '{}'", self.0))),
        })
    }
}

/// Every accepted key, in echo order.
pub const KEYS: [&str; 31] = [
    "command", "out", "seed", "workers", "s0", "T", "h", "cost", "strategy", "strategies", "goal", "n", "dt",
    "scheme", "crossing", "cutoff", "theta0", "dump", "bins", "problem", "value", "scale", "n_s", "n_t",
    "substeps", "refine", "grid_t", "grid_s", "tol", "mode", "gains",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub seed: u64,
    /// `0` uses every available core.
    pub workers: usize,
    pub s0: f64,
    pub horizon: f64,
    pub threshold: f64,
    pub cost: TerminalCost,
    pub strategy: StrategySpec,
    pub strategies: Vec<StrategySpec>,
    pub goal: Problem,
    pub n: usize,
    pub dt: f64,
    pub scheme: Scheme,
    pub crossing: CrossingDetection,
    pub cutoff: Option<f64>,
    pub theta0: Option<f64>,
    /// Number of leading trajectories written as CSV.
    pub dump: usize,
    pub bins: usize,
    pub problem: Problem,
    /// `jacobs`, `mintime`, `zero` or `dp`.
    pub value: String,
    pub scale: f64,
    pub n_s: usize,
    pub n_t: usize,
    pub substeps: Option<usize>,
    pub refine: Vec<usize>,
    pub grid_t: usize,
    pub grid_s: usize,
    pub tol: f64,
    pub mode: RotationMode,
    pub gains: Vec<f64>,
}

fn parse_f64(key: &'static str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: '{v}' is not a number")))
}

fn parse_usize(key: &'static str, v: &str) -> Result<usize> {
    let v = v.trim();
    // allow 1e5 style counts
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    let x = parse_f64(key, v)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as usize)
    } else {
        Err(Error::Config(format!("{key}: '{v}' is not a non-negative integer")))
    }
}

fn parse_auto<T>(v: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        f(v).map(Some)
    }
}

fn list<T>(v: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(f).collect()
}

fn in_range(name: &'static str, x: f64, ok: bool, bound: &'static str) -> Result<f64> {
    if ok && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(name, x, bound))
    }
}

fn fmt_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".to_string(), T::to_string)
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let n = match command {
            Command::Crossval => 10,
            Command::Probe => 10_000,
            _ => 100_000,
        };
        RunConfig {
            command,
            out: PathBuf::from("out"),
            seed: 0,
            workers: 0,
            s0: 0.9,
            horizon: 0.5,
            threshold: 0.5,
            cost: TerminalCost::LinearEntropy,
            strategy: StrategySpec(
                match command {
                    Command::Hit => "mintime",
                    Command::Verify => "auto",
                    _ => "jacobs",
                }
                .into(),
            ),
            strategies: vec![StrategySpec("jacobs".into()), StrategySpec("mintime".into())],
            goal: if command == Command::Probe { Problem::Finite } else { Problem::Hitting },
            n,
            dt: 1e-4,
            scheme: Scheme::Milstein,
            crossing: CrossingDetection::BridgeCorrected,
            cutoff: None,
            theta0: None,
            dump: 0,
            bins: 50,
            problem: Problem::Finite,
            value: "jacobs".into(),
            scale: 1.0,
            n_s: 400,
            n_t: 201,
            substeps: None,
            refine: Vec::new(),
            grid_t: 200,
            grid_s: 200,
            tol: 1e-9,
            mode: RotationMode::Continuous,
            gains: vec![10.0, 100.0, 1000.0],
        }
    }

    /// Applies one assignment, checking the value's bounds.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "command" => self.command = v.parse()?,
            "out" => self.out = PathBuf::from(v),
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: '{v}' is not an unsigned integer")))?
            }
            "workers" => self.workers = parse_usize("workers", v)?,
            "s0" => {
                let x = parse_f64("s0", v)?;
                self.s0 = in_range("s0", x, (0.0..=1.0).contains(&x), "[0, 1]")?;
            }
            "T" => {
                let x = parse_f64("T", v)?;
                self.horizon = in_range("T", x, x >= 0.0, "[0, inf)")?;
            }
            "h" => {
                let x = parse_f64("h", v)?;
                self.threshold = in_range("h", x, x > 0.0 && x < 1.0, "(0, 1)")?;
            }
            "cost" => {
                self.cost = match v {
                    "linear" => TerminalCost::LinearEntropy,
                    "negsqrt" => TerminalCost::NegSqrtPurity,
                    _ => return Err(Error::Config(format!("cost: '{v}' is not linear or negsqrt"))),
                }
            }
            "strategy" => self.strategy = StrategySpec::parse(v)?,
            "strategies" => self.strategies = list(v, StrategySpec::parse)?,
            "goal" | "problem" => {
                let p = match v {
                    "finite" | "cost" => Problem::Finite,
                    "hitting" => Problem::Hitting,
                    _ => return Err(Error::Config(format!("{key}: '{v}' is not finite or hitting"))),
                };
                if key == "goal" {
                    self.goal = p;
                } else {
                    self.problem = p;
                }
            }
            "n" => {
                let n = parse_usize("n", v)?;
                if n == 0 {
                    return Err(Error::domain("n", 0.0, "[1, inf)"));
                }
                self.n = n;
            }
            "dt" => {
                let x = parse_f64("dt", v)?;
                self.dt = in_range("dt", x, x > 0.0, "(0, inf)")?;
            }
            "scheme" => {
                self.scheme = match v {
                    "euler" => Scheme::EulerMaruyama,
                    "milstein" => Scheme::Milstein,
                    _ => return Err(Error::Config(format!("scheme: '{v}' is not euler or milstein"))),
                }
            }
            "crossing" => {
                self.crossing = match v {
                    "bridge" => CrossingDetection::BridgeCorrected,
                    "interpolate" => CrossingDetection::Interpolate,
                    _ => return Err(Error::Config(format!("crossing: '{v}' is not bridge or interpolate"))),
                }
            }
            "cutoff" => {
                self.cutoff = parse_auto(v, |x| {
                    let c = parse_f64("cutoff", x)?;
                    in_range("cutoff", c, c > 0.0, "(0, inf)")
                })?
            }
            "theta0" => self.theta0 = parse_auto(v, |x| parse_f64("theta0", x))?,
            "dump" => self.dump = parse_usize("dump", v)?,
            "bins" => self.bins = parse_usize("bins", v)?.max(1),
            "value" => {
                if !["jacobs", "mintime", "zero", "dp"].contains(&v) {
                    return Err(Error::Config(format!("value: '{v}' is not jacobs, mintime, zero or dp")));
                }
                self.value = v.to_string();
            }
            "scale" => self.scale = parse_f64("scale", v)?,
            "n_s" | "n_t" | "grid_t" | "grid_s" => {
                let n = parse_usize("grid size", v)?;
                if n < 2 {
                    return Err(Error::Config(format!("{key} must be at least 2, got {n}")));
                }
                match key {
                    "n_s" => self.n_s = n,
                    "n_t" => self.n_t = n,
                    "grid_t" => self.grid_t = n,
                    _ => self.grid_s = n,
                }
            }
            "substeps" => self.substeps = parse_auto(v, |x| parse_usize("substeps", x))?,
            "refine" => self.refine = list(v, |x| parse_usize("refine", x))?,
            "tol" => {
                let x = parse_f64("tol", v)?;
                self.tol = in_range("tol", x, x >= 0.0, "[0, inf)")?;
            }
            "mode" => {
                self.mode = match v {
                    "continuous" => RotationMode::Continuous,
                    "perstep" => RotationMode::PerStep,
                    _ => return Err(Error::Config(format!("mode: '{v}' is not continuous or perstep"))),
                }
            }
            "gains" => self.gains = list(v, |x| parse_f64("gains", x))?,
            other => return Err(unknown_key(other)),
        }
        Ok(())
    }

    /// Every key with its resolved value, in [`KEYS`] order.
    pub fn echo_pairs(&self) -> Vec<(&'static str, String)> {
        let problem = |p: Problem| match p {
            Problem::Finite => "finite",
            Problem::Hitting => "hitting",
        };
        KEYS.iter()
            .map(|&k| {
                let v = match k {
                    "command" => self.command.to_string(),
                    "out" => self.out.display().to_string(),
                    "seed" => self.seed.to_string(),
                    "workers" => self.workers.to_string(),
                    "s0" => format!("{:?}", self.s0),
                    "T" => format!("{:?}", self.horizon),
                    "h" => format!("{:?}", self.threshold),
                    "cost" => self.cost.name().to_string(),
                    "strategy" => self.strategy.0.clone(),
                    "strategies" => self.strategies.iter().map(|s| s.0.as_str()).collect::<Vec<_>>().join(","),
                    "goal" => problem(self.goal).to_string(),
                    "n" => self.n.to_string(),
                    "dt" => format!("{:?}", self.dt),
                    "scheme" => match self.scheme {
                        Scheme::EulerMaruyama => "euler",
                        Scheme::Milstein => "milstein",
                    }
                    .to_string(),
                    "crossing" => match self.crossing {
                        CrossingDetection::BridgeCorrected => "bridge",
                        CrossingDetection::Interpolate => "interpolate",
                    }
                    .to_string(),
                    "cutoff" => fmt_opt(&self.cutoff.map(Debugged)),
                    "theta0" => fmt_opt(&self.theta0.map(Debugged)),
                    "dump" => self.dump.to_string(),
                    "bins" => self.bins.to_string(),
                    "problem" => problem(self.problem).to_string(),
                    "value" => self.value.clone(),
                    "scale" => format!("{:?}", self.scale),
                    "n_s" => self.n_s.to_string(),
                    "n_t" => self.n_t.to_string(),
                    "substeps" => fmt_opt(&self.substeps),
                    "refine" => fmt_list(&self.refine),
                    "grid_t" => self.grid_t.to_string(),
                    "grid_s" => self.grid_s.to_string(),
                    "tol" => format!("{:?}", self.tol),
                    "mode" => match self.mode {
                        RotationMode::Continuous => "continuous",
                        RotationMode::PerStep => "perstep",
                    }
                    .to_string(),
                    "gains" => fmt_list(&self.gains.iter().map(|g| Debugged(*g)).collect::<Vec<_>>()),
                    _ => unreachable!("every key is echoed"),
                };
                (k, v)
            })
            .collect()
    }

    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.echo_pairs() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }
}

/// Shortest round-tripping float text.
struct Debugged(f64);

impl fmt::Display for Debugged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

fn unknown_key(key: &str) -> Error {
    let nearest = KEYS
        .iter()
        .map(|k| (strsim::jaro_winkler(&key.to_lowercase(), &k.to_lowercase()), *k))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
        .unwrap_or("n");
    Error::Config(format!("unknown key '{key}'; nearest valid key is '{nearest}'"))
}

/// Splits `key = value` text into assignments, skipping blanks and comments.
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{raw}'", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Resolves a configuration: command defaults, then the file, then the
/// overrides. A `command` key in the file must agree with `command`.
pub fn parse_config(command: Command, file: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults(command);
    let from_file = match file {
        Some(text) => parse_assignments(text)?,
        None => Vec::new(),
    };
    for (k, v) in from_file.iter().chain(overrides) {
        if k == "command" {
            let c: Command = v.parse()?;
            if c != command {
                return Err(Error::Config(format!("config is for '{c}' but the command is '{command}'")));
            }
            continue;
        }
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_hit_config_fills_defaults() {
        let cfg = parse_config(Command::Hit, Some("s0 = 0.9\nh = 0.5\n"), &[]).unwrap();
        assert_eq!((cfg.dt, cfg.n, cfg.seed), (1e-4, 100_000, 0));
        let echo = cfg.echo();
        for key in KEYS {
            assert!(echo.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key} missing");
        }
    }

    #[test]
    fn out_of_range_threshold_names_the_bound() {
        let e = parse_config(Command::Hit, Some("h = 1.5"), &[]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("h = 1.5") && msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let e = parse_config(Command::Hit, Some("temperture = 3"), &[]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("unknown key 'temperture'") && msg.contains("nearest valid key"), "{msg}");
        let e = parse_config(Command::Hit, Some("seeed = 3"), &[]).unwrap_err();
        assert!(e.to_string().contains("'seed'"));
    }

    #[test]
    fn overrides_win_over_file() {
        let o = vec![("n".to_string(), "10".to_string())];
        let cfg = parse_config(Command::Simulate, Some("n = 5\ndt = 1e-3 # coarse"), &o).unwrap();
        assert_eq!((cfg.n, cfg.dt), (10, 1e-3));
    }

    #[test]
    fn mismatched_command_is_rejected() {
        assert!(parse_config(Command::Hit, Some("command = solve"), &[]).is_err());
        assert!(parse_config(Command::Hit, Some("command = hit"), &[]).is_ok());
    }

    #[test]
    fn strategy_specs() {
        for ok in ["jacobs", "mintime", "constant:0.3", "omega:100:1.5707963", "table:p.csv"] {
            assert!(StrategySpec::parse(ok).is_ok(), "{ok}");
        }
        for bad in ["", "constant:2", "omega:-1:0", "nope", "table:"] {
            assert!(StrategySpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn malformed_line_is_an_error() {
        assert!(parse_assignments("s0 0.9").is_err());
    }

    proptest! {
        #[test]
        fn echo_round_trips(
            cmd in 0usize..7,
            s0 in 0.0f64..=1.0,
            h in 1e-6f64..0.999,
            dt in 1e-7f64..1e-1,
            n in 1usize..1_000_000,
            seed in any::<u64>(),
            cutoff in proptest::option::of(0.1f64..100.0),
            gains in proptest::collection::vec(0.0f64..1e4, 0..4),
            refine in proptest::collection::vec(2usize..2000, 0..4),
        ) {
            let mut cfg = RunConfig::defaults(Command::ALL[cmd]);
            cfg.s0 = s0;
            cfg.threshold = h;
            cfg.dt = dt;
            cfg.n = n;
            cfg.seed = seed;
            cfg.cutoff = cutoff;
            cfg.gains = gains;
            cfg.refine = refine;
            let back = parse_config(cfg.command, Some(&cfg.echo()), &[]).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
