//! Ranking strategies with common random numbers.

use serde::{Deserialize, Serialize};

use super::{passage_times, terminal_samples, EnsembleConfig, EnsembleSummary};
use crate::error::{Error, Result};
use crate::strategies::{Horizon, Strategy, TerminalCost};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Goal {
    ExpectedCost { cost: TerminalCost, horizon: f64 },
    MeanHittingTime { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub strategy: String,
    pub summary: EnsembleSummary,
}

/// `later − earlier` in the ranking, trajectory by trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDifference {
    pub better: String,
    pub worse: String,
    pub difference: EnsembleSummary,
    /// Difference in units of its standard error; infinite for an exact,
    /// nonzero difference and zero for identical samples.
    pub separation: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub goal: Goal,
    /// Lowest estimate first.
    pub ranking: Vec<RankedEntry>,
    pub pairs: Vec<PairwiseDifference>,
}

impl ComparisonReport {
    pub fn winner(&self) -> &str {
        &self.ranking[0].strategy
    }

    pub fn pair(&self, better: &str, worse: &str) -> Option<&PairwiseDifference> {
        self.pairs.iter().find(|p| p.better == better && p.worse == worse)
    }
}

/// Runs every strategy on the same per-trajectory noise streams and ranks
/// them by estimate. Pairwise significance uses the paired differences.
pub fn compare_strategies(strategies: &[Strategy], goal: Goal, cfg: &EnsembleConfig) -> Result<ComparisonReport> {
    if strategies.len() < 2 {
        return Err(Error::Config("comparison needs at least 2 strategies".into()));
    }
    let mut run = *cfg;
    let mut samples = Vec::with_capacity(strategies.len());
    match goal {
        Goal::ExpectedCost { cost, horizon } => {
            run.horizon = Horizon::Terminal(horizon);
            for s in strategies {
                samples.push((terminal_samples(s, cost, &run)?, 0));
            }
        }
        Goal::MeanHittingTime { threshold } => {
            run.horizon = Horizon::Threshold(threshold);
            for s in strategies {
                let p = passage_times(s, &run)?;
                p.check_censoring()?;
                let c = p.censored_count();
                samples.push((p.times, c));
            }
        }
    }

    let mut order: Vec<usize> = (0..strategies.len()).collect();
    let summaries: Vec<EnsembleSummary> = samples
        .iter()
        .map(|(x, c)| EnsembleSummary::from_samples(x, *c))
        .collect();
    order.sort_by(|&a, &b| summaries[a].estimate.total_cmp(&summaries[b].estimate));

    let ranking = order
        .iter()
        .map(|&k| RankedEntry {
            strategy: strategies[k].name(),
            summary: summaries[k],
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            let d: Vec<f64> = samples[b].0.iter().zip(&samples[a].0).map(|(x, y)| x - y).collect();
            let diff = EnsembleSummary::from_samples(&d, 0);
            let separation = if diff.stderr > 0.0 {
                diff.estimate.abs() / diff.stderr
            } else if diff.estimate != 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            pairs.push(PairwiseDifference {
                better: strategies[a].name(),
                worse: strategies[b].name(),
                significant: diff.estimate.abs() > diff.ci95,
                difference: diff,
                separation,
            });
        }
    }
    Ok(ComparisonReport { goal, ranking, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> EnsembleConfig {
        EnsembleConfig::new(n, 0.9, 1e-3, Horizon::Terminal(0.5)).with_seed(5)
    }

    #[test]
    fn jacobs_wins_expected_cost() {
        let goal = Goal::ExpectedCost {
            cost: TerminalCost::LinearEntropy,
            horizon: 0.5,
        };
        let r = compare_strategies(&[Strategy::MinTime, Strategy::Jacobs], goal, &cfg(2000)).unwrap();
        assert_eq!(r.winner(), "jacobs");
        assert!(r.pair("jacobs", "mintime").unwrap().separation > 3.0);
    }

    #[test]
    fn min_time_wins_hitting_time() {
        let goal = Goal::MeanHittingTime { threshold: 0.5 };
        let r = compare_strategies(&[Strategy::Jacobs, Strategy::MinTime], goal, &cfg(2000)).unwrap();
        assert_eq!(r.winner(), "mintime");
        assert!(r.pair("mintime", "jacobs").unwrap().significant);
    }

    #[test]
    fn repeated_strategy_ties() {
        let goal = Goal::MeanHittingTime { threshold: 0.5 };
        let r = compare_strategies(&[Strategy::MinTime, Strategy::MinTime], goal, &cfg(200)).unwrap();
        let p = &r.pairs[0];
        assert_eq!(p.difference.estimate, 0.0);
        assert!(!p.significant);
    }

    #[test]
    fn single_strategy_is_rejected() {
        let goal = Goal::MeanHittingTime { threshold: 0.5 };
        assert!(compare_strategies(&[Strategy::Jacobs], goal, &cfg(10)).is_err());
    }
}
