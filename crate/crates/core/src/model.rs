//! Hosting levels, cost parameters, arrival sequences and the per-slot cost
//! accounting shared by every policy and benchmark.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("ladder needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("first hosting level must be alpha = 0 with g = 1, got alpha = {alpha}, g = {g}")]
    BadFirstLevel { alpha: f64, g: f64 },
    #[error("last hosting level must be alpha = 1, got {0}")]
    BadLastLevel(f64),
    #[error("hosting fractions must be strictly increasing (level {0})")]
    NotIncreasing(usize),
    #[error("service-cost factor must be strictly decreasing and within [0, 1] (level {0})")]
    BadServiceFactor(usize),
    #[error("parameter {name} must be finite and non-negative, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("assumption 1 violated: rent c = {c} exceeds per-slot request cap kappa = {kappa}")]
    Assumption1 { c: f64, kappa: f64 },
    #[error("assumption 2 violated: alpha + g(alpha) = {sum} > 1 at level {level}")]
    Assumption2 { level: usize, sum: f64 },
    #[error("assumption 3 violated: c*alpha + g(alpha)*kappa = {cost} > kappa at level {level}")]
    Assumption3 { level: usize, cost: f64 },
    #[error("fetch cost M = {0} must exceed 1")]
    FetchCostTooSmall(f64),
    #[error("request count {value} at slot {slot} outside [0, {kappa}]")]
    RequestOutOfRange { slot: usize, value: f64, kappa: f64 },
    #[error("schedule length {schedule} does not match arrival length {arrivals}")]
    LengthMismatch { schedule: usize, arrivals: usize },
    #[error("level index {index} at slot {slot} out of range for a ladder of {levels} levels")]
    LevelOutOfRange {
        slot: usize,
        index: usize,
        levels: usize,
    },
}

/// One hosting option: the hosted fraction and the per-request service-cost factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub alpha: f64,
    pub g: f64,
}

/// The K admissible hosting fractions `0 = alpha_1 < ... < alpha_K = 1` with
/// their service-cost factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HostingLadder {
    levels: Vec<Level>,
}

impl HostingLadder {
    pub fn new(levels: Vec<Level>) -> Result<Self, ModelError> {
        if levels.len() < 2 {
            return Err(ModelError::TooFewLevels(levels.len()));
        }
        let first = levels[0];
        if first.alpha != 0.0 || first.g != 1.0 {
            return Err(ModelError::BadFirstLevel {
                alpha: first.alpha,
                g: first.g,
            });
        }
        let last = levels[levels.len() - 1];
        if last.alpha != 1.0 {
            return Err(ModelError::BadLastLevel(last.alpha));
        }
        for (i, pair) in levels.windows(2).enumerate() {
            if !(pair[1].alpha > pair[0].alpha) {
                return Err(ModelError::NotIncreasing(i + 1));
            }
            if !(pair[1].g < pair[0].g) || !(0.0..=1.0).contains(&pair[1].g) {
                return Err(ModelError::BadServiceFactor(i + 1));
            }
        }
        Ok(Self { levels })
    }

    /// Cloud-only or fully hosted: `{0: 1, 1: g_full}`.
    pub fn two_level(g_full: f64) -> Result<Self, ModelError> {
        Self::new(vec![
            Level { alpha: 0.0, g: 1.0 },
            Level {
                alpha: 1.0,
                g: g_full,
            },
        ])
    }

    /// `{0: 1, alpha2: g2, 1: 0}`, the single partial level setting.
    pub fn three_level(alpha2: f64, g2: f64) -> Result<Self, ModelError> {
        Self::new(vec![
            Level { alpha: 0.0, g: 1.0 },
            Level {
                alpha: alpha2,
                g: g2,
            },
            Level { alpha: 1.0, g: 0.0 },
        ])
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.levels[i].alpha
    }

    pub fn g(&self, i: usize) -> f64 {
        self.levels[i].g
    }

    /// Hosted-fraction vector `s`.
    pub fn fractions(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.alpha).collect()
    }

    /// Service-factor vector `f`.
    pub fn service_factors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.g).collect()
    }

    /// Index of the fully hosted level.
    pub fn full(&self) -> usize {
        self.levels.len() - 1
    }
}

impl<'de> Deserialize<'de> for HostingLadder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let levels = Vec::<Level>::deserialize(d)?;
        HostingLadder::new(levels).map_err(serde::de::Error::custom)
    }
}

/// Rent `c` per slot for the full service, fetch cost `m` for the full
/// service, and per-slot request cap `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub kappa: f64,
}

impl CostParams {
    pub fn new(c: f64, m: f64, kappa: f64) -> Self {
        Self { c, m, kappa }
    }
}

/// Checks the model assumptions on a (ladder, params) pair, reporting the
/// first one that fails.
pub fn validate(ladder: &HostingLadder, params: &CostParams) -> Result<(), ModelError> {
    for (name, value) in [("c", params.c), ("M", params.m), ("kappa", params.kappa)] {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::BadParameter { name, value });
        }
    }
    if params.c > params.kappa {
        return Err(ModelError::Assumption1 {
            c: params.c,
            kappa: params.kappa,
        });
    }
    for (i, l) in ladder.levels().iter().enumerate() {
        let sum = l.alpha + l.g;
        if sum > 1.0 + 1e-12 {
            return Err(ModelError::Assumption2 { level: i, sum });
        }
    }
    for (i, l) in ladder.levels().iter().enumerate() {
        let cost = params.c * l.alpha + l.g * params.kappa;
        if cost > params.kappa * (1.0 + 1e-12) {
            return Err(ModelError::Assumption3 { level: i, cost });
        }
    }
    if !(params.m > 1.0) {
        return Err(ModelError::FetchCostTooSmall(params.m));
    }
    Ok(())
}

/// Per-slot request counts, each within `[0, kappa]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSequence {
    requests: Vec<f64>,
    kappa: f64,
}

impl ArrivalSequence {
    pub fn new(requests: Vec<f64>, kappa: f64) -> Result<Self, ModelError> {
        for (i, &r) in requests.iter().enumerate() {
            if !r.is_finite() || r < 0.0 || r > kappa {
                return Err(ModelError::RequestOutOfRange {
                    slot: i + 1,
                    value: r,
                    kappa,
                });
            }
        }
        Ok(Self { requests, kappa })
    }

    pub fn requests(&self) -> &[f64] {
        &self.requests
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Horizon `T`.
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Cumulative requests `R_T`.
    pub fn total(&self) -> f64 {
        self.requests.iter().sum()
    }

    /// First `t` slots.
    pub fn prefix(&self, t: usize) -> ArrivalSequence {
        Self {
            requests: self.requests[..t.min(self.requests.len())].to_vec(),
            kappa: self.kappa,
        }
    }

    /// Hex digest of the exact bit patterns; used to verify that policies in
    /// one trial saw the same arrivals.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for r in &self.requests {
            hasher.update(r.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Level index per slot; slot 0 is implicitly the `alpha = 0` level.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HostingSchedule(pub Vec<usize>);

impl HostingSchedule {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    /// Number of slots whose level is above the previous slot's level.
    pub fn fetch_count(&self) -> usize {
        let mut prev = 0;
        let mut n = 0;
        for &l in &self.0 {
            if l > prev {
                n += 1;
            }
            prev = l;
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostBreakdown {
    pub rent: f64,
    pub service: f64,
    pub fetch: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(rent: f64, service: f64, fetch: f64) -> Self {
        Self {
            rent,
            service,
            fetch,
            total: rent + service + fetch,
        }
    }

    /// Component-wise accumulation. `total` is folded from the slot totals
    /// so that it matches a plain left-to-right sum of slot costs exactly.
    pub fn accumulate(&mut self, slot: &CostBreakdown) {
        self.rent += slot.rent;
        self.service += slot.service;
        self.fetch += slot.fetch;
        self.total += slot.total;
    }
}

/// Cost of hosting `level_now` in a slot with `requests` arrivals after
/// hosting `level_prev` in the previous slot. Eviction is free.
pub fn slot_cost(
    level_now: usize,
    level_prev: usize,
    requests: f64,
    ladder: &HostingLadder,
    params: &CostParams,
) -> CostBreakdown {
    let alpha = ladder.alpha(level_now);
    let rent = params.c * alpha;
    let service = ladder.g(level_now) * requests;
    let fetch = params.m * (alpha - ladder.alpha(level_prev)).max(0.0);
    CostBreakdown::new(rent, service, fetch)
}

/// Cumulative cost of a schedule starting from the `alpha = 0` level.
pub fn horizon_cost(
    schedule: &HostingSchedule,
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
) -> Result<CostBreakdown, ModelError> {
    Ok(per_slot_costs(schedule, arrivals, ladder, params)?
        .iter()
        .fold(CostBreakdown::default(), |mut acc, s| {
            acc.accumulate(s);
            acc
        }))
}

pub fn per_slot_costs(
    schedule: &HostingSchedule,
    arrivals: &ArrivalSequence,
    ladder: &HostingLadder,
    params: &CostParams,
) -> Result<Vec<CostBreakdown>, ModelError> {
    if schedule.len() != arrivals.len() {
        return Err(ModelError::LengthMismatch {
            schedule: schedule.len(),
            arrivals: arrivals.len(),
        });
    }
    let mut prev = 0;
    let mut out = Vec::with_capacity(schedule.len());
    for (t, (&level, &r)) in schedule.0.iter().zip(arrivals.requests()).enumerate() {
        if level >= ladder.len() {
            return Err(ModelError::LevelOutOfRange {
                slot: t + 1,
                index: level,
                levels: ladder.len(),
            });
        }
        out.push(slot_cost(level, prev, r, ladder, params));
        prev = level;
    }
    Ok(out)
}

/// Per-slot decisions and costs of one policy on one arrival sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub schedule: HostingSchedule,
    pub per_slot: Vec<CostBreakdown>,
    pub cumulative: CostBreakdown,
    pub seed: u64,
    /// Slot after which a waiting policy started following its leader.
    pub wait_end: Option<usize>,
}

impl RunRecord {
    pub fn fetch_count(&self) -> usize {
        self.schedule.fetch_count()
    }

    /// Cumulative cost over the first `t` slots.
    pub fn cost_through(&self, t: usize) -> CostBreakdown {
        self.per_slot[..t]
            .iter()
            .fold(CostBreakdown::default(), |mut acc, s| {
                acc.accumulate(s);
                acc
            })
    }
}
