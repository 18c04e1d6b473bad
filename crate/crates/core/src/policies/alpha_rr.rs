use super::{HostingPolicy, PolicyError};
use crate::model::{CostParams, HostingLadder};

/// Relative tolerance under which two hindsight costs count as tied.
pub(crate) const TIE_TOLERANCE: f64 = 1e-9;

/// Retro-renting with at most one partial hosting level.
///
/// After every slot the policy looks back over the window since its last
/// level change and asks, for each other level `v`, whether a schedule that
/// kept the current level and then switched to `v` for some suffix of the
/// window would have been cheaper than staying put. Inside this hindsight
/// computation a switch costs `M * |alpha_v - alpha_current|` in either
/// direction; the cost actually incurred still charges fetches only.
///
/// The switching suffix covers slots `tau..=t` with
/// `t_recent < tau < t`. On a tie between staying and switching the policy
/// switches, which makes the two-level case fetch exactly when
/// `sum r >= M + sum c` and evict when `sum r + M <= sum c` over some suffix.
#[derive(Debug, Clone)]
pub struct AlphaRetroRenting {
    alphas: Vec<f64>,
    service_factors: Vec<f64>,
    c: f64,
    m: f64,
    current: usize,
    t_recent: usize,
    /// Requests observed since `t_recent`.
    window: Vec<f64>,
    /// Per level, the smallest cost difference (level minus current) summed
    /// over a suffix `tau..=t` with `tau > t_recent`; `None` before any slot.
    best_suffix: Vec<Option<f64>>,
}

impl AlphaRetroRenting {
    pub fn new(ladder: &HostingLadder, params: &CostParams) -> Result<Self, PolicyError> {
        if ladder.len() > 3 {
            return Err(PolicyError::TooManyLevels(ladder.len()));
        }
        Ok(Self {
            alphas: ladder.fractions(),
            service_factors: ladder.service_factors(),
            c: params.c,
            m: params.m,
            current: 0,
            t_recent: 0,
            window: Vec::new(),
            best_suffix: vec![None; ladder.len()],
        })
    }

    pub fn current_level(&self) -> usize {
        self.current
    }

    pub fn last_change(&self) -> usize {
        self.t_recent
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    fn slot_cost(&self, level: usize, requests: f64) -> f64 {
        self.c * self.alphas[level] + self.service_factors[level] * requests
    }

    /// Feeds `r_t` and returns the level for slot `t + 1`.
    pub fn step(&mut self, t: usize, requests: f64) -> usize {
        debug_assert_eq!(t, self.t_recent + self.window.len() + 1);
        self.window.push(requests);
        let here = self.slot_cost(self.current, requests);

        // Hindsight cost of each level relative to staying (staying = 0).
        let mut relative = vec![0.0; self.alphas.len()];
        let mut scale = self.m.abs().max(1.0);
        for v in 0..self.alphas.len() {
            if v == self.current {
                continue;
            }
            let diff = self.slot_cost(v, requests) - here;
            let prev = self.best_suffix[v];
            // suffixes of length >= 2 extend a suffix ending at t - 1
            relative[v] = match prev {
                Some(p) => {
                    scale = scale.max(p.abs());
                    self.m * (self.alphas[v] - self.alphas[self.current]).abs() + diff + p
                }
                None => f64::INFINITY,
            };
            self.best_suffix[v] = Some(match prev {
                Some(p) => diff + p.min(0.0),
                None => diff,
            });
        }

        let next = choose_level(&relative, self.current, scale);
        if next != self.current {
            self.current = next;
            self.t_recent = t;
            self.window.clear();
            self.best_suffix.iter_mut().for_each(|b| *b = None);
        }
        self.current
    }
}

/// Picks the level with the smallest hindsight cost. Levels within tolerance
/// of the minimum are tied; among tied levels a different level beats the
/// current one, then the lowest index wins.
pub(crate) fn choose_level(costs: &[f64], current: usize, scale: f64) -> usize {
    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * scale.max(min.abs()).max(1.0);
    let tied: Vec<usize> = (0..costs.len())
        .filter(|&i| costs[i] <= min + tol)
        .collect();
    tied.iter()
        .copied()
        .find(|&i| i != current)
        .unwrap_or(current)
}

impl HostingPolicy for AlphaRetroRenting {
    fn decide(&mut self, _t: usize) -> usize {
        self.current
    }

    fn observe(&mut self, t: usize, requests: f64) {
        self.step(t, requests);
    }
}
