//! Offline benchmarks: best static level (realized and in expectation), the
//! dynamic offline optimum, and an exhaustive enumerator used to check it.

use thiserror::Error;

use crate::model::{slot_cost, ArrivalSequence, CostParams, HostingLadder, HostingSchedule};

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("mean arrival rate must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("enumeration of {levels}^{horizon} schedules exceeds the budget of {budget}")]
    BudgetExceeded {
        levels: usize,
        horizon: usize,
        budget: u64,
    },
}

/// Best level to hold for the whole horizon, and what it costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticBenchmark {
    pub level: usize,
    pub cost: f64,
}

fn best_static(ladder: &HostingLadder, cost_of: impl Fn(usize) -> f64) -> StaticBenchmark {
    let mut best = StaticBenchmark {
        level: 0,
        cost: f64::INFINITY,
    };
    for i in 0..ladder.len() {
        let cost = cost_of(i);
        if cost < best.cost {
            best = StaticBenchmark { level: i, cost };
        }
    }
    best
}

/// `min_i { c alpha_i T + g(alpha_i) R_T + M alpha_i }` for a realized sequence.
pub fn optimal_static_realized(
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
) -> StaticBenchmark {
    let horizon = arrivals.len() as f64;
    let total = arrivals.total();
    best_static(ladder, |i| {
        let a = ladder.alpha(i);
        params.c * a * horizon + ladder.g(i) * total + params.m * a
    })
}

/// `min_i { mu_i T + M alpha_i }` with `mu_i = c alpha_i + g(alpha_i) mu`.
pub fn optimal_static_stochastic(
    mu: f64,
    horizon: usize,
    ladder: &HostingLadder,
    params: &CostParams,
) -> Result<StaticBenchmark, OracleError> {
    if !(mu > 0.0) {
        return Err(OracleError::NonPositiveMean(mu));
    }
    if horizon == 0 {
        return Ok(StaticBenchmark {
            level: 0,
            cost: 0.0,
        });
    }
    let t = horizon as f64;
    Ok(best_static(ladder, |i| {
        let a = ladder.alpha(i);
        (params.c * a + ladder.g(i) * mu) * t + params.m * a
    }))
}

/// Exact dynamic offline optimum by forward dynamic programming over
/// (slot, level), starting from the `alpha = 0` level.
///
/// Backtracking prefers the lower level whenever several predecessors (or
/// final levels) reach the same cost.
pub fn offline_optimal_dp(
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
) -> (HostingSchedule, f64) {
    let k = ladder.len();
    let horizon = arrivals.len();
    if horizon == 0 {
        return (HostingSchedule(Vec::new()), 0.0);
    }
    let mut cost = vec![f64::INFINITY; k];
    cost[0] = 0.0;
    // parent[t * k + j]: level at slot t - 1 on the best path reaching j at slot t
    let mut parent = vec![0usize; horizon * k];
    let mut next = vec![0.0; k];
    for (t, &r) in arrivals.requests().iter().enumerate() {
        for (j, slot) in next.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (i, &prior) in cost.iter().enumerate() {
                if prior == f64::INFINITY {
                    continue;
                }
                let cand = prior + slot_cost(j, i, r, ladder, params).total;
                if cand < best {
                    best = cand;
                    arg = i;
                }
            }
            *slot = best;
            parent[t * k + j] = arg;
        }
        std::mem::swap(&mut cost, &mut next);
    }
    let mut level = 0;
    let mut best = f64::INFINITY;
    for (j, &c) in cost.iter().enumerate() {
        if c < best {
            best = c;
            level = j;
        }
    }
    let mut schedule = vec![0usize; horizon];
    for t in (0..horizon).rev() {
        schedule[t] = level;
        level = parent[t * k + level];
    }
    (HostingSchedule(schedule), best)
}

/// Minimum cost over all `K^T` schedules, by depth-first enumeration.
pub fn brute_force_offline(
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
    budget: u64,
) -> Result<f64, OracleError> {
    let k = ladder.len();
    let horizon = arrivals.len();
    let count = (k as u64).checked_pow(horizon as u32);
    if count.is_none_or(|n| n > budget) {
        return Err(OracleError::BudgetExceeded {
            levels: k,
            horizon,
            budget,
        });
    }

    fn descend(
        t: usize,
        prev: usize,
        acc: f64,
        reqs: &[f64],
        ladder: &HostingLadder,
        params: &CostParams,
    ) -> f64 {
        if t == reqs.len() {
            return acc;
        }
        (0..ladder.len())
            .map(|j| {
                let total = acc + slot_cost(j, prev, reqs[t], ladder, params).total;
                descend(t + 1, j, total, reqs, ladder, params)
            })
            .fold(f64::INFINITY, f64::min)
    }

    Ok(descend(0, 0, 0.0, arrivals.requests(), ladder, params))
}
