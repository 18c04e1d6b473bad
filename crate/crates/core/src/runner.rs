//! Config-driven Monte-Carlo experiments over policies and parameter sweeps.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrivals::{stream_rng, ArrivalError, ArrivalSpec, POLICY_STREAM};
use crate::metrics::{regret_adversarial, Summary};
use crate::model::{validate, CostBreakdown, CostParams, HostingLadder, ModelError};
use crate::oracles::{offline_optimal_dp, optimal_static_stochastic, OracleError};
use crate::policies::{
    simulate, AlphaRetroRenting, EtaSchedule, FollowPerturbedLeader, HostingPolicy, PolicyError,
    StaticLevel, WaitThenFtpl,
};
use crate::report;

/// Overrides the configured output directory when set.
pub const OUTPUT_DIR_ENV: &str = "HOSTSIM_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid parameters at c = {c}, M = {m}: {source}")]
    Model {
        c: f64,
        m: f64,
        #[source]
        source: ModelError,
    },
    #[error("policy {policy}: {source}")]
    Policy {
        policy: String,
        #[source]
        source: PolicyError,
    },
    #[error("arrivals: {0}")]
    Arrivals(#[from] ArrivalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl RunnerError {
    /// True for failures caused by the filesystem rather than the config.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            RunnerError::Io { .. }
                | RunnerError::Csv { .. }
                | RunnerError::Arrivals(ArrivalError::Io { .. })
        )
    }
}

/// A scalar or a list of values to sweep over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(v) => vec![*v],
            Sweep::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub c: Sweep,
    #[serde(rename = "M")]
    pub m: Sweep,
    pub kappa: f64,
}

fn default_beta() -> f64 {
    6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PolicySpec {
    Ftpl {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        eta: EtaSchedule,
    },
    Wftpl {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        eta: EtaSchedule,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        delta: f64,
    },
    AlphaRr {
        #[serde(default)]
        name: Option<String>,
    },
    Static {
        #[serde(default)]
        name: Option<String>,
        level: usize,
    },
}

impl PolicySpec {
    /// Name used in result rows.
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Ftpl { name, .. } => name.clone().unwrap_or_else(|| "ftpl".into()),
            PolicySpec::Wftpl { name, .. } => name.clone().unwrap_or_else(|| "wftpl".into()),
            PolicySpec::AlphaRr { name } => name.clone().unwrap_or_else(|| "alpha-rr".into()),
            PolicySpec::Static { name, level } => {
                name.clone().unwrap_or_else(|| format!("static-{level}"))
            }
        }
    }

    /// Instantiates the policy; randomized policies draw from the trial's policy stream.
    pub fn build(
        &self,
        ladder: &HostingLadder,
        params: &CostParams,
        seed: u64,
    ) -> Result<Box<dyn HostingPolicy + Send>, PolicyError> {
        let mut rng = stream_rng(seed, POLICY_STREAM);
        Ok(match self {
            PolicySpec::Ftpl { eta, .. } => {
                Box::new(FollowPerturbedLeader::new(ladder, params, *eta, &mut rng)?)
            }
            PolicySpec::Wftpl {
                eta, beta, delta, ..
            } => Box::new(WaitThenFtpl::new(
                ladder, params, *eta, *beta, *delta, &mut rng,
            )?),
            PolicySpec::AlphaRr { .. } => Box::new(AlphaRetroRenting::new(ladder, params)?),
            PolicySpec::Static { level, .. } => Box::new(StaticLevel::new(*level, ladder)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub ladder: HostingLadder,
    pub params: SweepParams,
    pub arrivals: ArrivalSpec,
    pub policies: Vec<PolicySpec>,
    pub horizons: Vec<usize>,
    pub trials: u64,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

/// Ladder and a single parameter point, read from a config file. Accepts a
/// full experiment config as long as `c` and `M` hold one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub ladder: HostingLadder,
    pub params: CostParams,
}

#[derive(Deserialize)]
struct RawModelConfig {
    ladder: HostingLadder,
    params: SweepParams,
}

impl ModelConfig {
    pub fn from_file(path: &Path) -> Result<Self, RunnerError> {
        let text = fs::read_to_string(path).map_err(|source| RunnerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, RunnerError> {
        let raw: RawModelConfig =
            serde_json::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        let single = |name: &str, sweep: &Sweep| match sweep.values().as_slice() {
            [v] => Ok(*v),
            _ => Err(RunnerError::Config(format!(
                "{name} must be a single value here"
            ))),
        };
        let params = CostParams::new(
            single("c", &raw.params.c)?,
            single("M", &raw.params.m)?,
            raw.params.kappa,
        );
        validate(&raw.ladder, &params).map_err(|source| RunnerError::Model {
            c: params.c,
            m: params.m,
            source,
        })?;
        Ok(Self {
            ladder: raw.ladder,
            params,
        })
    }
}

/// One `(T, M, c)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub horizon: usize,
    pub params: CostParams,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative trace paths are resolved against the
    /// config file's directory.
    pub fn from_file(path: &Path) -> Result<Self, RunnerError> {
        let text = fs::read_to_string(path).map_err(|source| RunnerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_json(&text)?;
        if let ArrivalSpec::Trace { path: trace, .. } = &mut config.arrivals {
            if trace.is_relative() {
                if let Some(dir) = path.parent() {
                    *trace = dir.join(&*trace);
                }
            }
        }
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, RunnerError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Sweep points in output order: horizon, then M, then c.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let mut points = Vec::new();
        for &horizon in &self.horizons {
            for m in self.params.m.values() {
                for c in self.params.c.values() {
                    points.push(SweepPoint {
                        horizon,
                        params: CostParams::new(c, m, self.params.kappa),
                    });
                }
            }
        }
        points
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.params.c.values().is_empty() || self.params.m.values().is_empty() {
            return Err(RunnerError::Config(
                "sweep lists for c and M must be non-empty".into(),
            ));
        }
        if self.horizons.is_empty() {
            return Err(RunnerError::Config("horizons must be non-empty".into()));
        }
        if self.policies.is_empty() {
            return Err(RunnerError::Config(
                "at least one policy is required".into(),
            ));
        }
        if self.trials == 0 {
            return Err(RunnerError::Config("trials must be at least 1".into()));
        }
        let mut names: Vec<String> = self.policies.iter().map(PolicySpec::name).collect();
        names.sort();
        names.dedup();
        if names.len() != self.policies.len() {
            return Err(RunnerError::Config("policy names must be unique".into()));
        }
        for point in self.sweep_points() {
            let p = point.params;
            validate(&self.ladder, &p).map_err(|source| RunnerError::Model {
                c: p.c,
                m: p.m,
                source,
            })?;
            for spec in &self.policies {
                spec.build(&self.ladder, &p, self.base_seed)
                    .map_err(|source| RunnerError::Policy {
                        policy: spec.name(),
                        source,
                    })?;
            }
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        self.base_seed ^ trial
    }

    /// Output directory, honouring [`OUTPUT_DIR_ENV`].
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

/// Result of one policy on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub experiment: String,
    pub policy: String,
    pub point_index: usize,
    pub policy_index: usize,
    pub horizon: usize,
    pub m: f64,
    pub c: f64,
    pub arrival_label: String,
    pub trial: u64,
    pub seed: u64,
    pub arrival_checksum: String,
    pub cost: CostBreakdown,
    pub regret_stochastic: Option<f64>,
    pub regret_adversarial: f64,
    pub ratio_adversarial: Option<f64>,
    pub fetch_count: usize,
    pub wait_end: Option<usize>,
    pub schedule: Vec<usize>,
}

/// Aggregate of one policy at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub experiment: String,
    pub policy: String,
    pub horizon: usize,
    pub m: f64,
    pub c: f64,
    pub arrival_label: String,
    pub trials: usize,
    pub cost: Summary,
    pub mean_rent: f64,
    pub mean_service: f64,
    pub mean_fetch: f64,
    pub regret_stochastic: Option<Summary>,
    pub regret_adversarial: Summary,
    pub ratio_adversarial: Option<Summary>,
    pub mean_fetch_count: f64,
    /// Mean release slot over the trials that released.
    pub mean_wait_end: Option<f64>,
}

fn run_trial(
    config: &ExperimentConfig,
    point_index: usize,
    point: &SweepPoint,
    trial: u64,
) -> Result<Vec<TrialSummary>, RunnerError> {
    let params = &point.params;
    let ladder = &config.ladder;
    let seed = config.trial_seed(trial);
    let arrivals = config
        .arrivals
        .generate(ladder, params, point.horizon, seed)?;
    let checksum = arrivals.checksum();
    let label = config.arrivals.label(ladder, params);
    let stochastic_benchmark = match config.arrivals.mean(ladder, params) {
        Some(mu) if mu > 0.0 => {
            Some(optimal_static_stochastic(mu, point.horizon, ladder, params)?.cost)
        }
        _ => None,
    };
    let (_, dp_cost) = offline_optimal_dp(&arrivals, ladder, params);

    config
        .policies
        .iter()
        .enumerate()
        .map(|(policy_index, spec)| {
            let mut policy =
                spec.build(ladder, params, seed)
                    .map_err(|source| RunnerError::Policy {
                        policy: spec.name(),
                        source,
                    })?;
            let run = simulate(policy.as_mut(), &arrivals, ladder, params, seed);
            let cost = run.cumulative;
            Ok(TrialSummary {
                experiment: config.name.clone(),
                policy: spec.name(),
                point_index,
                policy_index,
                horizon: point.horizon,
                m: params.m,
                c: params.c,
                arrival_label: label.clone(),
                trial,
                seed,
                arrival_checksum: checksum.clone(),
                cost,
                regret_stochastic: stochastic_benchmark.map(|b| cost.total - b),
                regret_adversarial: regret_adversarial(&run, &arrivals, ladder, params),
                ratio_adversarial: (dp_cost > 0.0).then(|| cost.total / dp_cost),
                fetch_count: run.fetch_count(),
                wait_end: run.wait_end,
                schedule: run.schedule.0,
            })
        })
        .collect()
}

/// Runs every sweep point, trial and policy. Trials run in parallel; the
/// result is ordered by (sweep point, policy, trial).
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialSummary>, RunnerError> {
    config.validate()?;
    let jobs: Vec<(usize, SweepPoint, u64)> = config
        .sweep_points()
        .into_iter()
        .enumerate()
        .flat_map(|(i, p)| (0..config.trials).map(move |t| (i, p, t)))
        .collect();
    let nested: Vec<Vec<TrialSummary>> = jobs
        .par_iter()
        .map(|(i, p, t)| run_trial(config, *i, p, *t))
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<TrialSummary> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.point_index, r.policy_index, r.trial));
    Ok(rows)
}

/// Folds trial rows (in the order produced by [`run_trials`]) into one row per
/// (sweep point, policy).
pub fn aggregate(rows: &[TrialSummary]) -> Vec<AggregateRow> {
    rows.chunk_by(|a, b| a.point_index == b.point_index && a.policy_index == b.policy_index)
        .map(|group| {
            let first = &group[0];
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&TrialSummary) -> f64| group.iter().map(f).sum::<f64>() / n;
            let collect = |f: &dyn Fn(&TrialSummary) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(f).collect()
            };
            let costs: Vec<f64> = group.iter().map(|r| r.cost.total).collect();
            let regrets: Vec<f64> = group.iter().map(|r| r.regret_adversarial).collect();
            let stoch = collect(&|r| r.regret_stochastic);
            let ratios = collect(&|r| r.ratio_adversarial);
            let waits = collect(&|r| r.wait_end.map(|t| t as f64));
            AggregateRow {
                experiment: first.experiment.clone(),
                policy: first.policy.clone(),
                horizon: first.horizon,
                m: first.m,
                c: first.c,
                arrival_label: first.arrival_label.clone(),
                trials: group.len(),
                cost: Summary::of(&costs).expect("non-empty group"),
                mean_rent: mean(&|r| r.cost.rent),
                mean_service: mean(&|r| r.cost.service),
                mean_fetch: mean(&|r| r.cost.fetch),
                regret_stochastic: Summary::of(&stoch),
                regret_adversarial: Summary::of(&regrets).expect("non-empty group"),
                ratio_adversarial: Summary::of(&ratios),
                mean_fetch_count: mean(&|r| r.fetch_count as f64),
                mean_wait_end: Summary::of(&waits).map(|s| s.mean),
            }
        })
        .collect()
}

/// Paths of the files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub trials_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs the experiment and writes `<name>_trials.csv` and `<name>_aggregate.csv`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, RunnerError> {
    let rows = run_trials(config)?;
    let aggregate = aggregate(&rows);
    let dir = config.resolved_output_dir();
    fs::create_dir_all(&dir).map_err(|source| RunnerError::Io {
        path: dir.clone(),
        source,
    })?;
    let trials_csv = dir.join(format!("{}_trials.csv", config.name));
    let aggregate_csv = dir.join(format!("{}_aggregate.csv", config.name));
    write_csv(&trials_csv, |f| report::write_trials(f, &rows))?;
    write_csv(&aggregate_csv, |f| report::write_aggregate(f, &aggregate))?;
    log::info!(
        "{}: {} trial rows, {} aggregate rows written to {}",
        config.name,
        rows.len(),
        aggregate.len(),
        dir.display()
    );
    Ok(ExperimentOutput {
        trials_csv,
        aggregate_csv,
        aggregate,
    })
}

fn write_csv(
    path: &Path,
    write: impl FnOnce(BufWriter<File>) -> csv::Result<()>,
) -> Result<(), RunnerError> {
    let file = File::create(path).map_err(|source| RunnerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write(BufWriter::new(file)).map_err(|source| RunnerError::Csv {
        path: path.to_path_buf(),
        source,
    })
}
