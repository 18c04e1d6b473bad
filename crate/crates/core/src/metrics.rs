//! Regret, competitive ratio, arrival-gap statistics and trial aggregation.

use thiserror::Error;

use crate::model::{ArrivalSequence, CostParams, HostingLadder, RunRecord};
use crate::oracles::{
    offline_optimal_dp, optimal_static_realized, optimal_static_stochastic, OracleError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("competitive ratio undefined: benchmark cost is zero")]
    ZeroBenchmark,
    #[error("stochastic competitive ratio needs the mean arrival rate")]
    MissingMean,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Expected per-slot cost of each level under i.i.d. arrivals of mean `mu`,
/// and the gaps to the best level.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalStats {
    pub mu: f64,
    pub level_means: Vec<f64>,
    pub best_level: usize,
    pub gaps: Vec<f64>,
    /// Smallest gap over the suboptimal levels.
    pub gap_min: f64,
    pub gap_max: f64,
}

impl ArrivalStats {
    /// Stochastic bounds need a strictly positive gap.
    pub fn bounds_available(&self) -> bool {
        self.gap_min > 0.0
    }
}

pub fn arrival_stats(
    mu: f64,
    ladder: &HostingLadder,
    params: &CostParams,
) -> Result<ArrivalStats, OracleError> {
    if !(mu > 0.0) {
        return Err(OracleError::NonPositiveMean(mu));
    }
    let level_means: Vec<f64> = (0..ladder.len())
        .map(|i| params.c * ladder.alpha(i) + ladder.g(i) * mu)
        .collect();
    let best_level = crate::policies::argmin_lowest(level_means.iter().cloned());
    let best = level_means[best_level];
    let gaps: Vec<f64> = level_means.iter().map(|m| m - best).collect();
    let gap_min = gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best_level)
        .map(|(_, &g)| g)
        .fold(f64::INFINITY, f64::min);
    let gap_max = gaps.iter().cloned().fold(0.0, f64::max);
    Ok(ArrivalStats {
        mu,
        level_means,
        best_level,
        gaps,
        gap_min,
        gap_max,
    })
}

/// Realized cost minus the best static level in hindsight. May be negative.
pub fn regret_adversarial(
    run: &RunRecord,
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
) -> f64 {
    run.cumulative.total - optimal_static_realized(arrivals, ladder, params).cost
}

/// Mean cost minus the expected cost of the best static level for known `mu`.
pub fn regret_stochastic(
    mean_cost: f64,
    mu: f64,
    horizon: usize,
    ladder: &HostingLadder,
    params: &CostParams,
) -> Result<f64, OracleError> {
    Ok(mean_cost - optimal_static_stochastic(mu, horizon, ladder, params)?.cost)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioMode {
    /// Against the dynamic offline optimum of the realized sequence.
    Adversarial,
    /// Against the expected cost of the best static level for mean `mu`.
    Stochastic { mu: f64 },
}

pub fn competitive_ratio(
    run_cost: f64,
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
    mode: RatioMode,
) -> Result<f64, MetricsError> {
    let denom = match mode {
        RatioMode::Adversarial => offline_optimal_dp(arrivals, ladder, params).1,
        RatioMode::Stochastic { mu } => {
            optimal_static_stochastic(mu, arrivals.len(), ladder, params)?.cost
        }
    };
    ratio(run_cost, denom)
}

pub fn ratio(cost: f64, benchmark: f64) -> Result<f64, MetricsError> {
    if benchmark == 0.0 {
        Err(MetricsError::ZeroBenchmark)
    } else {
        Ok(cost / benchmark)
    }
}

/// Mean, standard error and 10th/90th percentiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    pub p10: f64,
    pub p90: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        Some(Summary {
            n,
            mean,
            std_err,
            p10: percentile(&sorted, 0.10),
            p90: percentile(&sorted, 0.90),
        })
    }
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Ordinary least squares fit `y = intercept + slope * x` with its R^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}
