//! Closed-form regret and competitive-ratio bounds for the perturbed-leader
//! policies. All logarithms are natural.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::HostingLadder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("bound {which} needs symbol {symbol}")]
    Missing {
        which: BoundKind,
        symbol: &'static str,
    },
    #[error("stochastic bounds assume Delta_min != 0 (got {0})")]
    ZeroGap(f64),
    #[error("invalid value for {symbol}: {value}")]
    Invalid { symbol: &'static str, value: f64 },
    #[error("unknown bound {0:?}; expected one of {1}")]
    Unknown(String, &'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Adversarial regret of FTPL with `eta_t = alpha sqrt(t)`.
    FtplAdversarial,
    /// Adversarial regret of W-FTPL.
    WftplAdversarial,
    /// Stochastic regret of FTPL with `eta_t = alpha sqrt(t - 1)`.
    FtplStochastic,
    /// Stochastic regret of W-FTPL.
    WftplStochastic,
    /// Adversarial competitive ratio of FTPL.
    FtplCompetitive,
    /// Adversarial competitive ratio of W-FTPL.
    WftplCompetitive,
    /// Lower bound on the adversarial regret of FTPL, `M alpha_2 / K`.
    FtplAdversarialLower,
}

const NAMES: &str =
    "ftpl-adv, wftpl-adv, ftpl-stoch, wftpl-stoch, ftpl-cr, wftpl-cr, adv-lower-ftpl";

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::FtplAdversarial,
        BoundKind::WftplAdversarial,
        BoundKind::FtplStochastic,
        BoundKind::WftplStochastic,
        BoundKind::FtplCompetitive,
        BoundKind::WftplCompetitive,
        BoundKind::FtplAdversarialLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::FtplAdversarial => "ftpl-adv",
            BoundKind::WftplAdversarial => "wftpl-adv",
            BoundKind::FtplStochastic => "ftpl-stoch",
            BoundKind::WftplStochastic => "wftpl-stoch",
            BoundKind::FtplCompetitive => "ftpl-cr",
            BoundKind::WftplCompetitive => "wftpl-cr",
            BoundKind::FtplAdversarialLower => "adv-lower-ftpl",
        }
    }

    /// Symbols the formula reads, in display order.
    pub fn symbols(self) -> &'static [&'static str] {
        match self {
            BoundKind::FtplAdversarial => &["T", "K", "alpha", "kappa", "M", "c"],
            BoundKind::WftplAdversarial => &["T", "K", "alpha", "kappa", "M", "c", "beta", "delta"],
            BoundKind::FtplStochastic => &["K", "alpha", "kappa", "M", "delta_min"],
            BoundKind::WftplStochastic => &[
                "K",
                "alpha",
                "kappa",
                "M",
                "beta",
                "delta",
                "delta_min",
                "delta_max",
            ],
            BoundKind::FtplCompetitive => &["alpha", "kappa", "M", "c", "ladder"],
            BoundKind::WftplCompetitive => &["alpha", "kappa", "M", "c", "ladder"],
            BoundKind::FtplAdversarialLower => &["M", "alpha2", "K"],
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BoundError::Unknown(s.to_string(), NAMES))
    }
}

/// Symbol values for bound evaluation. `alpha` is the learning-rate scale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundInputs {
    pub horizon: Option<f64>,
    pub levels: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub m: Option<f64>,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub gap_min: Option<f64>,
    pub gap_max: Option<f64>,
    /// Smallest nonzero hosting fraction.
    pub alpha2: Option<f64>,
    pub ladder: Option<HostingLadder>,
}

impl BoundInputs {
    /// Sets `K` and `alpha2` from a ladder when they are not given explicitly.
    pub fn with_ladder(mut self, ladder: HostingLadder) -> Self {
        self.levels.get_or_insert(ladder.len() as f64);
        self.alpha2.get_or_insert(ladder.alpha(1));
        self.ladder = Some(ladder);
        self
    }

    /// Sets a scalar by symbol name. Returns false for unknown names.
    pub fn set(&mut self, symbol: &str, value: f64) -> bool {
        let slot = match symbol {
            "T" => &mut self.horizon,
            "K" => &mut self.levels,
            "alpha" => &mut self.alpha,
            "kappa" => &mut self.kappa,
            "M" => &mut self.m,
            "c" => &mut self.c,
            "beta" => &mut self.beta,
            "delta" => &mut self.delta,
            "delta_min" => &mut self.gap_min,
            "delta_max" => &mut self.gap_max,
            "alpha2" => &mut self.alpha2,
            _ => return false,
        };
        *slot = Some(value);
        true
    }

    pub fn get(&self, symbol: &str) -> Option<f64> {
        match symbol {
            "T" => self.horizon,
            "K" => self.levels,
            "alpha" => self.alpha,
            "kappa" => self.kappa,
            "M" => self.m,
            "c" => self.c,
            "beta" => self.beta,
            "delta" => self.delta,
            "delta_min" => self.gap_min,
            "delta_max" => self.gap_max,
            "alpha2" => self.alpha2,
            _ => None,
        }
    }
}

struct Reader<'a> {
    which: BoundKind,
    inputs: &'a BoundInputs,
}

impl Reader<'_> {
    fn get(&self, symbol: &'static str) -> Result<f64, BoundError> {
        let v = self.inputs.get(symbol).ok_or(BoundError::Missing {
            which: self.which,
            symbol,
        })?;
        if !v.is_finite() {
            return Err(BoundError::Invalid { symbol, value: v });
        }
        Ok(v)
    }

    fn positive(&self, symbol: &'static str) -> Result<f64, BoundError> {
        let v = self.get(symbol)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(BoundError::Invalid { symbol, value: v })
        }
    }

    fn ladder(&self) -> Result<&HostingLadder, BoundError> {
        self.inputs.ladder.as_ref().ok_or(BoundError::Missing {
            which: self.which,
            symbol: "ladder",
        })
    }

    fn gap_min(&self) -> Result<f64, BoundError> {
        let g = self.get("delta_min")?;
        if g == 0.0 {
            return Err(BoundError::ZeroGap(g));
        }
        if g < 0.0 {
            return Err(BoundError::Invalid {
                symbol: "delta_min",
                value: g,
            });
        }
        Ok(g)
    }

    /// `(ln M)^(1 + delta)`, requiring `M > 1`.
    fn log_fetch_power(&self) -> Result<f64, BoundError> {
        let m = self.get("M")?;
        if !(m > 1.0) {
            return Err(BoundError::Invalid {
                symbol: "M",
                value: m,
            });
        }
        let delta = self.get("delta")?;
        Ok(m.ln().powf(1.0 + delta))
    }
}

/// `sqrt(2T ln K)(alpha + 4 kappa^2 / alpha) + K^2 M (c + 2 kappa) sqrt(T + 1) / (2 alpha sqrt(pi))`
fn adversarial_core(r: &Reader) -> Result<f64, BoundError> {
    let t = r.get("T")?;
    let k = r.positive("K")?;
    let a = r.positive("alpha")?;
    let kappa = r.get("kappa")?;
    let m = r.get("M")?;
    let c = r.get("c")?;
    Ok((2.0 * t * k.ln()).sqrt() * (a + 4.0 * kappa * kappa / a)
        + k * k * m * (c + 2.0 * kappa) / (2.0 * a * PI.sqrt()) * (t + 1.0).sqrt())
}

/// `(sqrt(2 ln K) + 2 sqrt(2 h1) ln K / Delta_min)(alpha + 4 kappa^2 / alpha)`, `h1 = 4 max(8 alpha^2, kappa^2)`.
fn stochastic_core(r: &Reader) -> Result<f64, BoundError> {
    let k = r.positive("K")?;
    let a = r.positive("alpha")?;
    let kappa = r.get("kappa")?;
    let gap = r.gap_min()?;
    let h1 = 4.0 * (8.0 * a * a).max(kappa * kappa);
    Ok(
        ((2.0 * k.ln()).sqrt() + 2.0 * (2.0 * h1).sqrt() * k.ln() / gap)
            * (a + 4.0 * kappa * kappa / a),
    )
}

/// Terms shared by both competitive-ratio bounds, plus `kappa^2 / min_i(c alpha_i + g_i kappa)`.
fn competitive_parts(r: &Reader) -> Result<(f64, f64), BoundError> {
    let a = r.get("alpha")?;
    let kappa = r.get("kappa")?;
    let m = r.get("M")?;
    let c = r.positive("c")?;
    let ladder = r.ladder()?;
    let floor = (0..ladder.len())
        .map(|i| c * ladder.alpha(i) + ladder.g(i) * kappa)
        .fold(f64::INFINITY, f64::min);
    if !(floor > 0.0) {
        return Err(BoundError::Invalid {
            symbol: "min_i(c alpha_i + g(alpha_i) kappa)",
            value: floor,
        });
    }
    let steepest = (1..ladder.len())
        .map(|i| (1.0 - ladder.g(i)) / ladder.alpha(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let perturbation: f64 = (1..ladder.len())
        .map(|i| 16.0 * a * a / (c * c * ladder.alpha(i) * ladder.alpha(i)))
        .sum();
    let k2 = kappa * kappa;
    let main = k2 * (3.0 + 2.0 * m / c) / floor * steepest + k2 * (m + c) / floor * perturbation;
    Ok((main, k2 / floor))
}

/// Evaluates one of the closed-form bounds.
///
/// The W-FTPL adversarial bound carries a factor `kappa` on the wait term
/// `kappa sqrt(beta T (ln M)^(1 + delta))`.
pub fn theoretical_bound(which: BoundKind, inputs: &BoundInputs) -> Result<f64, BoundError> {
    let r = Reader { which, inputs };
    match which {
        BoundKind::FtplAdversarial => adversarial_core(&r),
        BoundKind::WftplAdversarial => {
            let wait =
                r.get("kappa")? * (r.get("beta")? * r.get("T")? * r.log_fetch_power()?).sqrt();
            Ok(wait + adversarial_core(&r)?)
        }
        BoundKind::FtplStochastic => {
            let a = r.positive("alpha")?;
            let kappa = r.get("kappa")?;
            let m = r.get("M")?;
            let gap = r.gap_min()?;
            Ok(stochastic_core(&r)?
                + (16.0 * a * a + 4.0 * kappa * kappa) / gap
                + (16.0 * a * a + 3.0 * kappa * kappa) * m / (gap * gap))
        }
        BoundKind::WftplStochastic => {
            let a = r.positive("alpha")?;
            let kappa = r.get("kappa")?;
            let beta = r.get("beta")?;
            let gap = r.gap_min()?;
            let gap_max = r.positive("delta_max")?;
            let k2 = kappa * kappa;
            let a2 = a * a;
            let wait = beta
                * k2
                * r.log_fetch_power()?
                * (4.0 / (gap * gap) + (16.0 * a2 + 3.0 * k2) / (gap * gap * gap_max * gap_max));
            Ok(1.0
                + wait
                + (16.0 * a2 + 4.0 * k2) * (1.0 / gap + 1.0 / (gap * gap))
                + stochastic_core(&r)?)
        }
        BoundKind::FtplCompetitive => Ok(competitive_parts(&r)?.0),
        BoundKind::WftplCompetitive => {
            let (main, extra) = competitive_parts(&r)?;
            Ok(main + extra)
        }
        BoundKind::FtplAdversarialLower => Ok(r.get("M")? * r.get("alpha2")? / r.positive("K")?),
    }
}
