//! Online hosting policies.
//!
//! Every policy follows the same slot protocol: [`HostingPolicy::decide`] is
//! called for slot `t` before the slot's requests are revealed, then
//! [`HostingPolicy::observe`] receives `r_t`. Slots are numbered from 1.

mod alpha_rr;
mod fixed;
mod ftpl;
mod wftpl;

pub use alpha_rr::AlphaRetroRenting;
pub use fixed::StaticLevel;
pub use ftpl::{EtaSchedule, FollowPerturbedLeader};
pub use wftpl::WaitThenFtpl;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::{
    slot_cost, ArrivalSequence, CostBreakdown, CostParams, HostingLadder, HostingSchedule,
    RunRecord,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("wait threshold needs ln M > 0, got M = {0}")]
    FetchCostTooSmall(f64),
    #[error("retro-renting supports at most one partial level (K <= 3), got K = {0}")]
    TooManyLevels(usize),
    #[error("static level {index} out of range for {levels} levels")]
    LevelOutOfRange { index: usize, levels: usize },
    #[error("invalid parameter {name} = {value}")]
    BadParameter { name: &'static str, value: f64 },
}

pub trait HostingPolicy {
    /// Level index hosted during slot `t`; may only depend on `r_1..r_{t-1}`.
    fn decide(&mut self, t: usize) -> usize;

    /// Reveal the requests of slot `t`.
    fn observe(&mut self, t: usize, requests: f64);

    /// Slot after which the policy stopped waiting, for policies with a wait phase.
    fn wait_end(&self) -> Option<usize> {
        None
    }
}

/// Runs `policy` over `arrivals`, charging every slot with the incurred cost.
pub fn simulate<P: HostingPolicy + ?Sized>(
    policy: &mut P,
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
    seed: u64,
) -> RunRecord {
    let horizon = arrivals.len();
    let mut schedule = Vec::with_capacity(horizon);
    let mut per_slot = Vec::with_capacity(horizon);
    let mut cumulative = CostBreakdown::default();
    let mut prev = 0;
    for (i, &r) in arrivals.requests().iter().enumerate() {
        let t = i + 1;
        let level = policy.decide(t);
        debug_assert!(level < ladder.len());
        let cost = slot_cost(level, prev, r, ladder, params);
        cumulative.accumulate(&cost);
        per_slot.push(cost);
        schedule.push(level);
        policy.observe(t, r);
        prev = level;
    }
    RunRecord {
        schedule: HostingSchedule(schedule),
        per_slot,
        cumulative,
        seed,
        wait_end: policy.wait_end(),
    }
}

/// One standard-normal draw per level.
pub fn sample_perturbation<R: Rng + ?Sized>(levels: usize, rng: &mut R) -> Vec<f64> {
    (0..levels).map(|_| rng.sample(StandardNormal)).collect()
}

/// Index of the smallest entry; ties go to the lowest index.
pub(crate) fn argmin_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin_lowest([1.0, 1.0, 2.0]), 0);
        assert_eq!(argmin_lowest([3.0, 2.5]), 1);
        assert_eq!(argmin_lowest([2.0, 0.5, 0.5]), 1);
    }
}
