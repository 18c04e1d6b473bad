//! CSV serialization of trial and aggregate results.

use std::io::Write;

use crate::runner::{AggregateRow, TrialSummary};

pub const AGGREGATE_HEADER: [&str; 17] = [
    "experiment",
    "policy",
    "T",
    "M",
    "c",
    "mu_or_trace",
    "trials",
    "mean_cost",
    "se_cost",
    "mean_rent",
    "mean_service",
    "mean_fetch",
    "mean_regret_stoch",
    "mean_regret_adv",
    "mean_cr_adv",
    "mean_fetch_count",
    "mean_T_s",
];

pub const TRIAL_HEADER: [&str; 18] = [
    "experiment",
    "policy",
    "T",
    "M",
    "c",
    "mu_or_trace",
    "trial",
    "seed",
    "arrival_checksum",
    "cost",
    "rent",
    "service",
    "fetch",
    "regret_stoch",
    "regret_adv",
    "cr_adv",
    "fetch_count",
    "T_s",
];

/// Formats with 9 significant digits, trimming trailing zeros; switches to
/// exponent notation outside `1e-5 <= |x| < 1e9`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

pub fn write_trials<W: Write>(out: W, rows: &[TrialSummary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.policy.clone(),
            r.horizon.to_string(),
            format_number(r.m),
            format_number(r.c),
            r.arrival_label.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.arrival_checksum.clone(),
            format_number(r.cost.total),
            format_number(r.cost.rent),
            format_number(r.cost.service),
            format_number(r.cost.fetch),
            opt(r.regret_stochastic),
            format_number(r.regret_adversarial),
            opt(r.ratio_adversarial),
            r.fetch_count.to_string(),
            r.wait_end.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.policy.clone(),
            r.horizon.to_string(),
            format_number(r.m),
            format_number(r.c),
            r.arrival_label.clone(),
            r.trials.to_string(),
            format_number(r.cost.mean),
            format_number(r.cost.std_err),
            format_number(r.mean_rent),
            format_number(r.mean_service),
            format_number(r.mean_fetch),
            opt(r.regret_stochastic.map(|s| s.mean)),
            format_number(r.regret_adversarial.mean),
            opt(r.ratio_adversarial.map(|s| s.mean)),
            format_number(r.mean_fetch_count),
            opt(r.mean_wait_end),
        ])?;
    }
    w.flush()?;
    Ok(())
}
