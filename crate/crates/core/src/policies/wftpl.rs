use rand::Rng;

use super::{EtaSchedule, FollowPerturbedLeader, HostingPolicy, PolicyError};
use crate::model::{CostParams, HostingLadder};

/// Hosts nothing until the score gap is large enough relative to the fetch
/// cost, then follows the perturbed leader.
///
/// The latch releases at the first slot `t` with
/// `t < G^2 / (kappa^2 * beta * (ln M)^(1 + delta))`, where `G` is the score
/// gap after the slot's update. Leader decisions start at slot `t + 1`.
#[derive(Debug, Clone)]
pub struct WaitThenFtpl {
    inner: FollowPerturbedLeader,
    eta: EtaSchedule,
    beta: f64,
    delta: f64,
    threshold_scale: f64,
    waiting: bool,
    wait_end: Option<usize>,
}

impl WaitThenFtpl {
    pub fn new<R: Rng + ?Sized>(
        ladder: &HostingLadder,
        params: &CostParams,
        eta: EtaSchedule,
        beta: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<Self, PolicyError> {
        let inner = FollowPerturbedLeader::new(ladder, params, eta, rng)?;
        Self::wrap(inner, params, eta, beta, delta)
    }

    pub fn wrap(
        inner: FollowPerturbedLeader,
        params: &CostParams,
        eta: EtaSchedule,
        beta: f64,
        delta: f64,
    ) -> Result<Self, PolicyError> {
        if !(params.m > 1.0) {
            return Err(PolicyError::FetchCostTooSmall(params.m));
        }
        if !(beta > 0.0) {
            return Err(PolicyError::BadParameter {
                name: "beta",
                value: beta,
            });
        }
        if !(delta >= 0.0) {
            return Err(PolicyError::BadParameter {
                name: "delta",
                value: delta,
            });
        }
        let threshold_scale = params.kappa * params.kappa * beta * params.m.ln().powf(1.0 + delta);
        Ok(Self {
            inner,
            eta,
            beta,
            delta,
            threshold_scale,
            waiting: true,
            wait_end: None,
        })
    }

    pub fn is_waiting(&self) -> bool {
        self.waiting
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn leader_state(&self) -> &FollowPerturbedLeader {
        &self.inner
    }
}

impl HostingPolicy for WaitThenFtpl {
    fn decide(&mut self, t: usize) -> usize {
        if self.waiting {
            0
        } else {
            self.inner.leader(self.eta.at(t))
        }
    }

    fn observe(&mut self, t: usize, requests: f64) {
        self.inner.accumulate(requests);
        if self.waiting {
            let gap = self.inner.score_gap();
            if (t as f64) < gap * gap / self.threshold_scale {
                self.waiting = false;
                self.wait_end = Some(t);
            }
        }
    }

    fn wait_end(&self) -> Option<usize> {
        self.wait_end
    }
}
