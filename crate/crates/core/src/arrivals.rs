//! Arrival-sequence generators and trace ingestion.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit seed. Arrivals of
//! a trial use stream [`ARRIVAL_STREAM`] and policy perturbations use
//! [`POLICY_STREAM`] of the same seed, so both are reproducible on any
//! platform and independent of each other.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ArrivalSequence, CostParams, HostingLadder, ModelError};

pub const ARRIVAL_STREAM: u64 = 0;
pub const POLICY_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum ArrivalError {
    #[error("invalid arrival probability {0} (need 0 < p <= 1)")]
    InvalidProbability(f64),
    #[error("invalid discrete distribution: {0}")]
    InvalidDistribution(String),
    #[error("frame burst length is undefined: kappa - c*alpha - g(alpha)*kappa = {0} <= 0")]
    NonPositiveBurstMargin(f64),
    #[error("frame length is undefined for rent c = {0}")]
    NonPositiveRent(f64),
    #[error("no partial or full level has 1 - g(alpha) > 0")]
    NoLowerBoundLevel,
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trace {path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("trace {0} contains no counts")]
    EmptyTrace(PathBuf),
    #[error("trace {path}, slot {slot}: count {value} exceeds kappa = {kappa}")]
    AboveCap {
        path: PathBuf,
        slot: usize,
        value: f64,
        kappa: f64,
    },
    #[error("trace has {available} slots but {requested} were requested")]
    TraceTooShort { available: usize, requested: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameMode {
    /// Burst of `ceil(M / (kappa - c))` slots, as in the synthetic experiment.
    Full,
    /// Burst sized by the cheapest nonzero level, as in the linear-regret construction.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClipPolicy {
    /// Clip counts above kappa down to kappa, with a warning.
    #[default]
    Clip,
    /// Reject traces containing counts above kappa.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ArrivalSpec {
    IidBernoulli {
        mu: f64,
    },
    IidDiscrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    AdversarialFrames {
        mode: FrameMode,
    },
    StochasticLowerBound,
    Trace {
        path: PathBuf,
        #[serde(default)]
        clip: ClipPolicy,
    },
}

impl ArrivalSpec {
    /// Mean arrival rate for i.i.d. arrival kinds.
    pub fn mean(&self, ladder: &HostingLadder, params: &CostParams) -> Option<f64> {
        match self {
            ArrivalSpec::IidBernoulli { mu } => Some(*mu),
            ArrivalSpec::IidDiscrete { values, probs } => {
                let total: f64 = probs.iter().sum();
                Some(values.iter().zip(probs).map(|(v, p)| v * p).sum::<f64>() / total)
            }
            ArrivalSpec::StochasticLowerBound => lower_bound_level(params, ladder)
                .ok()
                .map(|(_, p)| p * params.kappa),
            _ => None,
        }
    }

    /// Short label for result tables: the mean for i.i.d. specs, the file
    /// name for traces, the construction otherwise.
    pub fn label(&self, ladder: &HostingLadder, params: &CostParams) -> String {
        match self {
            ArrivalSpec::Trace { path, .. } => path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            ArrivalSpec::AdversarialFrames { mode } => match mode {
                FrameMode::Full => "frames-full".into(),
                FrameMode::Partial => "frames-partial".into(),
            },
            _ => self
                .mean(ladder, params)
                .map(crate::report::format_number)
                .unwrap_or_default(),
        }
    }

    /// Generates `horizon` slots of arrivals for the given seed.
    pub fn generate(
        &self,
        ladder: &HostingLadder,
        params: &CostParams,
        horizon: usize,
        seed: u64,
    ) -> Result<ArrivalSequence, ArrivalError> {
        let mut rng = stream_rng(seed, ARRIVAL_STREAM);
        match self {
            ArrivalSpec::IidBernoulli { mu } => {
                gen_iid_bernoulli(*mu, params.kappa, horizon, &mut rng)
            }
            ArrivalSpec::IidDiscrete { values, probs } => {
                gen_iid_discrete(values, probs, params.kappa, horizon, &mut rng)
            }
            ArrivalSpec::AdversarialFrames { mode } => {
                let shape = frame_shape(params, ladder, *mode)?;
                let frames = horizon.div_ceil(shape.len().max(1));
                let full = gen_adversarial_frames(params, ladder, frames, *mode)?;
                Ok(full.prefix(horizon))
            }
            ArrivalSpec::StochasticLowerBound => {
                gen_stochastic_lower_bound(params, ladder, horizon, &mut rng)
            }
            ArrivalSpec::Trace { path, clip } => {
                let trace = load_trace(path, params.kappa, *clip)?;
                if trace.len() < horizon {
                    return Err(ArrivalError::TraceTooShort {
                        available: trace.len(),
                        requested: horizon,
                    });
                }
                Ok(trace.prefix(horizon))
            }
        }
    }
}

/// `r_t = kappa * Bernoulli(mu / kappa)`, i.i.d.
pub fn gen_iid_bernoulli<R: Rng + ?Sized>(
    mu: f64,
    kappa: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<ArrivalSequence, ArrivalError> {
    let p = mu / kappa;
    if !(p > 0.0 && p <= 1.0) {
        return Err(ArrivalError::InvalidProbability(p));
    }
    let coin = Bernoulli::new(p).map_err(|_| ArrivalError::InvalidProbability(p))?;
    let reqs = (0..horizon)
        .map(|_| if coin.sample(rng) { kappa } else { 0.0 })
        .collect();
    Ok(ArrivalSequence::new(reqs, kappa)?)
}

/// i.i.d. draws from a finite distribution over request counts.
pub fn gen_iid_discrete<R: Rng + ?Sized>(
    values: &[f64],
    probs: &[f64],
    kappa: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<ArrivalSequence, ArrivalError> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(ArrivalError::InvalidDistribution(format!(
            "{} values vs {} probabilities",
            values.len(),
            probs.len()
        )));
    }
    let dist =
        WeightedIndex::new(probs).map_err(|e| ArrivalError::InvalidDistribution(e.to_string()))?;
    let reqs = (0..horizon).map(|_| values[dist.sample(rng)]).collect();
    Ok(ArrivalSequence::new(reqs, kappa)?)
}

/// Burst and idle lengths of one adversarial frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameShape {
    pub burst: usize,
    pub idle: usize,
}

impl FrameShape {
    pub fn len(&self) -> usize {
        self.burst + self.idle
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Level minimizing `M alpha_i / (kappa - c alpha_i - kappa g(alpha_i))` over
/// nonzero levels with a positive denominator, together with that ratio.
pub fn cheapest_burst_level(params: &CostParams, ladder: &HostingLadder) -> Option<(usize, f64)> {
    (1..ladder.len())
        .filter_map(|i| {
            let a = ladder.alpha(i);
            let margin = params.kappa - params.c * a - params.kappa * ladder.g(i);
            (margin > 0.0).then(|| (i, params.m * a / margin))
        })
        .fold(None, |best: Option<(usize, f64)>, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
}

pub fn frame_shape(
    params: &CostParams,
    ladder: &HostingLadder,
    mode: FrameMode,
) -> Result<FrameShape, ArrivalError> {
    if !(params.c > 0.0) {
        return Err(ArrivalError::NonPositiveRent(params.c));
    }
    let burst = match mode {
        FrameMode::Full => {
            let margin = params.kappa - params.c;
            if !(margin > 0.0) {
                return Err(ArrivalError::NonPositiveBurstMargin(margin));
            }
            (params.m / margin).ceil()
        }
        FrameMode::Partial => match cheapest_burst_level(params, ladder) {
            Some((_, ratio)) => ratio.ceil(),
            None => {
                let l = ladder.full();
                return Err(ArrivalError::NonPositiveBurstMargin(
                    params.kappa - params.c * ladder.alpha(l) - params.kappa * ladder.g(l),
                ));
            }
        },
    };
    let idle = (params.m / params.c).ceil();
    Ok(FrameShape {
        burst: burst as usize,
        idle: idle as usize,
    })
}

/// `n_frames` repetitions of a burst of `kappa` requests followed by idle slots.
pub fn gen_adversarial_frames(
    params: &CostParams,
    ladder: &HostingLadder,
    n_frames: usize,
    mode: FrameMode,
) -> Result<ArrivalSequence, ArrivalError> {
    let shape = frame_shape(params, ladder, mode)?;
    let mut reqs = Vec::with_capacity(n_frames * shape.len());
    for _ in 0..n_frames {
        reqs.extend(std::iter::repeat_n(params.kappa, shape.burst));
        reqs.extend(std::iter::repeat_n(0.0, shape.idle));
    }
    Ok(ArrivalSequence::new(reqs, params.kappa)?)
}

/// Level `l = argmin_{i != 1} alpha_i / (1 - g(alpha_i))` and the Bernoulli
/// parameter `c alpha_l / (kappa (1 - g(alpha_l)))`.
pub fn lower_bound_level(
    params: &CostParams,
    ladder: &HostingLadder,
) -> Result<(usize, f64), ArrivalError> {
    let (level, _) = (1..ladder.len())
        .filter(|&i| ladder.g(i) < 1.0)
        .map(|i| (i, ladder.alpha(i) / (1.0 - ladder.g(i))))
        .fold(None, |best: Option<(usize, f64)>, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
        .ok_or(ArrivalError::NoLowerBoundLevel)?;
    let p = params.c * ladder.alpha(level) / (params.kappa * (1.0 - ladder.g(level)));
    Ok((level, p))
}

/// i.i.d. `kappa * Bernoulli(p)` arrivals that make the two cheapest static
/// choices equally good in expectation.
pub fn gen_stochastic_lower_bound<R: Rng + ?Sized>(
    params: &CostParams,
    ladder: &HostingLadder,
    horizon: usize,
    rng: &mut R,
) -> Result<ArrivalSequence, ArrivalError> {
    let (_, p) = lower_bound_level(params, ladder)?;
    gen_iid_bernoulli(p * params.kappa, params.kappa, horizon, rng)
}

/// Reads pre-binned per-slot counts: either one number per line, or a
/// `slot,count` CSV with a header row and consecutive slots from 1.
pub fn load_trace(
    path: &Path,
    kappa: f64,
    clip: ClipPolicy,
) -> Result<ArrivalSequence, ArrivalError> {
    let text = fs::read_to_string(path).map_err(|source| ArrivalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let counts = parse_trace(&text, path)?;
    if counts.is_empty() {
        return Err(ArrivalError::EmptyTrace(path.to_path_buf()));
    }
    let mut clipped = 0usize;
    let mut reqs = Vec::with_capacity(counts.len());
    for (i, v) in counts.into_iter().enumerate() {
        if v > kappa {
            match clip {
                ClipPolicy::Clip => {
                    clipped += 1;
                    reqs.push(kappa);
                }
                ClipPolicy::Reject => {
                    return Err(ArrivalError::AboveCap {
                        path: path.to_path_buf(),
                        slot: i + 1,
                        value: v,
                        kappa,
                    })
                }
            }
        } else {
            reqs.push(v);
        }
    }
    if clipped > 0 {
        warn!(
            "{}: clipped {clipped} slot(s) to kappa = {kappa}",
            path.display()
        );
    }
    Ok(ArrivalSequence::new(reqs, kappa)?)
}

fn parse_trace(text: &str, path: &Path) -> Result<Vec<f64>, ArrivalError> {
    let err = |line: usize, message: String| ArrivalError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let is_csv = lines.first().is_some_and(|(_, l)| l.contains(','));
    let mut out = Vec::with_capacity(lines.len());
    let parse_count = |line: usize, field: &str| -> Result<f64, ArrivalError> {
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| err(line, format!("not a number: {field:?}")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(err(line, format!("negative or non-finite count {v}")));
        }
        Ok(v)
    };
    if is_csv {
        for (idx, (line, l)) in lines.iter().skip(1).enumerate() {
            let mut fields = l.split(',');
            let (Some(slot), Some(count), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(err(*line, "expected two columns slot,count".into()));
            };
            let slot: usize = slot
                .trim()
                .parse()
                .map_err(|_| err(*line, format!("bad slot index {slot:?}")))?;
            if slot != idx + 1 {
                return Err(err(
                    *line,
                    format!("slot {slot} out of sequence, expected {}", idx + 1),
                ));
            }
            out.push(parse_count(*line, count)?);
        }
    } else {
        for (line, l) in &lines {
            out.push(parse_count(*line, l)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn bernoulli_mean_within_three_sigma() {
        let mut rng = stream_rng(17, ARRIVAL_STREAM);
        let n = 10_000;
        let arr = gen_iid_bernoulli(0.4, 1.0, n, &mut rng).unwrap();
        let mean = arr.total() / n as f64;
        let sigma = (0.4f64 * 0.6 / n as f64).sqrt();
        assert!((mean - 0.4).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn bernoulli_edge_cases() {
        let mut rng = stream_rng(1, ARRIVAL_STREAM);
        let arr = gen_iid_bernoulli(5.0, 5.0, 100, &mut rng).unwrap();
        assert!(arr.requests().iter().all(|&r| r == 5.0));
        assert!(matches!(
            gen_iid_bernoulli(0.0, 1.0, 10, &mut rng),
            Err(ArrivalError::InvalidProbability(_))
        ));
        assert!(gen_iid_bernoulli(1.5, 1.0, 10, &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_sequence() {
        let ladder = HostingLadder::three_level(0.5, 0.45).unwrap();
        let params = CostParams::new(0.45, 5.0, 1.0);
        let spec = ArrivalSpec::IidBernoulli { mu: 0.4 };
        let a = spec.generate(&ladder, &params, 500, 99).unwrap();
        let b = spec.generate(&ladder, &params, 500, 99).unwrap();
        let c = spec.generate(&ladder, &params, 500, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // shorter horizons are prefixes
        let short = spec.generate(&ladder, &params, 200, 99).unwrap();
        assert_eq!(short.requests(), &a.requests()[..200]);
    }

    #[test]
    fn frame_examples() {
        let l2 = HostingLadder::two_level(0.0).unwrap();
        let p = CostParams::new(0.1, 50.0, 5.0);
        let shape = frame_shape(&p, &l2, FrameMode::Full).unwrap();
        assert_eq!(
            shape,
            FrameShape {
                burst: 11,
                idle: 500
            }
        );
        assert_eq!(frame_shape(&p, &l2, FrameMode::Partial).unwrap(), shape);
        let arr = gen_adversarial_frames(&p, &l2, 100, FrameMode::Full).unwrap();
        assert_eq!(arr.len(), 51_100);
        assert_eq!(
            &arr.requests()[..12],
            &[5.0; 11].iter().chain(&[0.0]).cloned().collect::<Vec<_>>()[..]
        );
        let p = CostParams::new(5.0, 50.0, 5.0);
        assert!(matches!(
            frame_shape(&p, &l2, FrameMode::Full),
            Err(ArrivalError::NonPositiveBurstMargin(_))
        ));
    }

    #[test]
    fn partial_frames_use_cheapest_level() {
        let ladder = HostingLadder::three_level(0.5, 0.45).unwrap();
        let p = CostParams::new(0.45, 5.0, 1.0);
        // ratios: level 1: 2.5 / (1 - 0.225 - 0.45) = 7.69..; level 2: 5 / 0.55 = 9.09..
        let (lvl, ratio) = cheapest_burst_level(&p, &ladder).unwrap();
        assert_eq!(lvl, 1);
        assert!((ratio - 2.5 / 0.325).abs() < 1e-12);
        let shape = frame_shape(&p, &ladder, FrameMode::Partial).unwrap();
        assert_eq!(shape, FrameShape { burst: 8, idle: 12 });
    }

    #[test]
    fn lower_bound_level_examples() {
        let l2 = HostingLadder::two_level(0.0).unwrap();
        let p = CostParams::new(0.45, 5.0, 1.0);
        let (lvl, prob) = lower_bound_level(&p, &l2).unwrap();
        assert_eq!(lvl, 1);
        assert!((prob - 0.45).abs() < 1e-12);

        let l3 = HostingLadder::three_level(0.5, 0.45).unwrap();
        let (lvl, prob) = lower_bound_level(&p, &l3).unwrap();
        assert_eq!(lvl, 1);
        assert!((prob - 0.225 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_sequence_mean() {
        let l3 = HostingLadder::three_level(0.5, 0.45).unwrap();
        let p = CostParams::new(0.45, 5.0, 1.0);
        let n = 100_000;
        let mut rng = stream_rng(5, ARRIVAL_STREAM);
        let arr = gen_stochastic_lower_bound(&p, &l3, n, &mut rng).unwrap();
        let target = 0.45 * 0.5 / 0.55;
        let sigma = (target * (1.0 - target) / n as f64).sqrt();
        assert!((arr.total() / n as f64 - target).abs() < 3.0 * sigma);
    }

    #[test]
    fn discrete_sampler_respects_support() {
        let mut rng = stream_rng(3, ARRIVAL_STREAM);
        let arr =
            gen_iid_discrete(&[0.0, 2.0, 4.0], &[0.5, 0.3, 0.2], 4.0, 1000, &mut rng).unwrap();
        assert!(arr.requests().iter().all(|r| [0.0, 2.0, 4.0].contains(r)));
        assert!(gen_iid_discrete(&[0.0, 6.0], &[0.5, 0.5], 4.0, 1000, &mut rng).is_err());
        assert!(gen_iid_discrete(&[0.0], &[0.5, 0.5], 4.0, 10, &mut rng).is_err());
    }

    #[test]
    fn trace_plain_lines() {
        let f = write_tmp("12\n300\n0\n");
        let arr = load_trace(f.path(), 300.0, ClipPolicy::Clip).unwrap();
        assert_eq!(arr.requests(), &[12.0, 300.0, 0.0]);
    }

    #[test]
    fn trace_clip_and_reject() {
        let f = write_tmp("450\n");
        let arr = load_trace(f.path(), 300.0, ClipPolicy::Clip).unwrap();
        assert_eq!(arr.requests(), &[300.0]);
        assert!(matches!(
            load_trace(f.path(), 300.0, ClipPolicy::Reject),
            Err(ArrivalError::AboveCap { .. })
        ));
    }

    #[test]
    fn trace_errors() {
        let f = write_tmp("");
        assert!(matches!(
            load_trace(f.path(), 300.0, ClipPolicy::Clip),
            Err(ArrivalError::EmptyTrace(_))
        ));
        let f = write_tmp("3\n-1\n");
        assert!(matches!(
            load_trace(f.path(), 300.0, ClipPolicy::Clip),
            Err(ArrivalError::Parse { line: 2, .. })
        ));
        let f = write_tmp("3\nabc\n");
        assert!(load_trace(f.path(), 300.0, ClipPolicy::Clip).is_err());
        assert!(matches!(
            load_trace(Path::new("/nonexistent/trace.txt"), 1.0, ClipPolicy::Clip),
            Err(ArrivalError::Io { .. })
        ));
    }

    #[test]
    fn trace_csv() {
        let f = write_tmp("slot,count\n1,5\n2,7.5\n3,0\n");
        let arr = load_trace(f.path(), 300.0, ClipPolicy::Clip).unwrap();
        assert_eq!(arr.requests(), &[5.0, 7.5, 0.0]);
        let f = write_tmp("slot,count\n1,5\n3,7\n");
        assert!(load_trace(f.path(), 300.0, ClipPolicy::Clip).is_err());
        let f = write_tmp("slot,count\n");
        assert!(matches!(
            load_trace(f.path(), 300.0, ClipPolicy::Clip),
            Err(ArrivalError::EmptyTrace(_))
        ));
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec: ArrivalSpec =
            serde_json::from_str(r#"{"kind":"iid-bernoulli","mu":0.4}"#).unwrap();
        assert_eq!(spec, ArrivalSpec::IidBernoulli { mu: 0.4 });
        let spec: ArrivalSpec =
            serde_json::from_str(r#"{"kind":"adversarial-frames","mode":"full"}"#).unwrap();
        assert_eq!(
            spec,
            ArrivalSpec::AdversarialFrames {
                mode: FrameMode::Full
            }
        );
        let spec: ArrivalSpec = serde_json::from_str(r#"{"kind":"trace","path":"x.txt"}"#).unwrap();
        assert!(matches!(
            spec,
            ArrivalSpec::Trace {
                clip: ClipPolicy::Clip,
                ..
            }
        ));
    }
}
