use std::collections::BTreeMap;
use std::path::Path;

use hostsim::runner::{run_experiment, ExperimentConfig, RunnerError};

const CONFIG: &str = r#"{
  "name": "io",
  "ladder": [{"alpha": 0, "g": 1}, {"alpha": 0.5, "g": 0.45}, {"alpha": 1, "g": 0}],
  "params": {"c": [0.3, 0.45], "M": 5, "kappa": 1},
  "arrivals": {"kind": "iid-bernoulli", "mu": 0.4},
  "policies": [
    {"type": "alpha-rr"},
    {"type": "ftpl", "eta": {"scale": 0.1}},
    {"type": "wftpl", "eta": {"scale": 0.1}, "beta": 6},
    {"type": "static", "level": 2}
  ],
  "horizons": [300, 600],
  "trials": 6,
  "base_seed": 11,
  "output_dir": "unused"
}"#;

fn config_in(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(CONFIG).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn read(path: &Path) -> (Vec<String>, Vec<BTreeMap<String, String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| {
            header
                .iter()
                .cloned()
                .zip(rec.unwrap().iter().map(String::from))
                .collect()
        })
        .collect();
    (header, rows)
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

#[test]
fn aggregate_csv_is_a_fold_of_trial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config_in(dir.path())).unwrap();
    let (header, trials) = read(&out.trials_csv);
    assert_eq!(
        header[..8],
        [
            "experiment",
            "policy",
            "T",
            "M",
            "c",
            "mu_or_trace",
            "trial",
            "seed"
        ]
    );
    let (header, agg) = read(&out.aggregate_csv);
    assert_eq!(header.len(), 17);
    assert_eq!(agg.len(), 2 * 2 * 4);
    assert_eq!(trials.len(), 2 * 2 * 4 * 6);

    let close = |a: f64, b: f64| (a - b).abs() <= 1e-7 * (1.0 + a.abs().max(b.abs()));
    for a in &agg {
        let group: Vec<_> = trials
            .iter()
            .filter(|t| ["policy", "T", "M", "c"].iter().all(|k| t[*k] == a[*k]))
            .collect();
        assert_eq!(group.len().to_string(), a["trials"]);
        let n = group.len() as f64;
        for (col, agg_col) in [
            ("cost", "mean_cost"),
            ("rent", "mean_rent"),
            ("service", "mean_service"),
            ("fetch", "mean_fetch"),
            ("regret_stoch", "mean_regret_stoch"),
            ("regret_adv", "mean_regret_adv"),
            ("cr_adv", "mean_cr_adv"),
            ("fetch_count", "mean_fetch_count"),
        ] {
            let mean = group.iter().map(|t| num(t, col)).sum::<f64>() / n;
            assert!(
                close(mean, num(a, agg_col)),
                "{agg_col}: {mean} vs {}",
                a[agg_col]
            );
        }
        let costs: Vec<f64> = group.iter().map(|t| num(t, "cost")).collect();
        let mean = costs.iter().sum::<f64>() / n;
        let se = (costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        assert!(close(se, num(a, "se_cost")));

        let waits: Vec<f64> = group
            .iter()
            .filter(|t| !t["T_s"].is_empty())
            .map(|t| num(t, "T_s"))
            .collect();
        if waits.is_empty() {
            assert_eq!(a["mean_T_s"], "");
        } else {
            assert!(close(
                waits.iter().sum::<f64>() / waits.len() as f64,
                num(a, "mean_T_s")
            ));
        }
    }
}

#[test]
fn arrivals_are_paired_across_policies() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config_in(dir.path())).unwrap();
    let (_, trials) = read(&out.trials_csv);
    let mut by_trial: BTreeMap<(String, String, String), Vec<String>> = BTreeMap::new();
    for t in &trials {
        assert_eq!(num(t, "seed") as u64, 11 ^ num(t, "trial") as u64);
        by_trial
            .entry((t["T"].clone(), t["c"].clone(), t["trial"].clone()))
            .or_default()
            .push(t["arrival_checksum"].clone());
    }
    for sums in by_trial.values() {
        assert_eq!(sums.len(), 4);
        assert!(sums.iter().all(|s| s == &sums[0]));
    }
}

#[test]
fn rows_are_ordered_and_reruns_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = run_experiment(&config_in(a.path())).unwrap();
    let out_b = run_experiment(&config_in(b.path())).unwrap();
    assert_eq!(
        std::fs::read(&out_a.trials_csv).unwrap(),
        std::fs::read(&out_b.trials_csv).unwrap()
    );
    assert_eq!(
        std::fs::read(&out_a.aggregate_csv).unwrap(),
        std::fs::read(&out_b.aggregate_csv).unwrap()
    );
    let (_, trials) = read(&out_a.trials_csv);
    let policies: Vec<&str> = trials
        .iter()
        .step_by(6)
        .take(4)
        .map(|t| t["policy"].as_str())
        .collect();
    assert_eq!(policies, ["alpha-rr", "ftpl", "wftpl", "static-2"]);
    let first: Vec<&str> = trials.iter().take(6).map(|t| t["trial"].as_str()).collect();
    assert_eq!(first, ["0", "1", "2", "3", "4", "5"]);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = run_experiment(&config_in(&blocker.join("sub"))).unwrap_err();
    assert!(err.is_io(), "{err}");
}

#[test]
fn trace_experiment_and_missing_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.txt"), "0\n2\n3\n1\n0\n0\n3\n3\n").unwrap();
    let cfg_text = r#"{
      "name": "tr",
      "ladder": [{"alpha": 0, "g": 1}, {"alpha": 1, "g": 0}],
      "params": {"c": 1, "M": 2, "kappa": 3},
      "arrivals": {"kind": "trace", "path": "t.txt"},
      "policies": [{"type": "alpha-rr"}, {"type": "ftpl"}],
      "horizons": [8],
      "trials": 3,
      "base_seed": 0,
      "output_dir": "unused"
    }"#;
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg_text).unwrap();
    let mut cfg = ExperimentConfig::from_file(&path).unwrap();
    cfg.output_dir = dir.path().join("out");
    let out = run_experiment(&cfg).unwrap();
    let (_, agg) = read(&out.aggregate_csv);
    assert_eq!(agg[0]["mu_or_trace"], "t.txt");
    assert_eq!(agg[0]["mean_regret_stoch"], "");

    cfg.horizons = vec![9];
    assert!(matches!(
        run_experiment(&cfg),
        Err(RunnerError::Arrivals(_))
    ));
    std::fs::remove_file(dir.path().join("t.txt")).unwrap();
    cfg.horizons = vec![8];
    assert!(run_experiment(&cfg).unwrap_err().is_io());
}
