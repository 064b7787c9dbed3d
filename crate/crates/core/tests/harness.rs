use std::collections::BTreeMap;

use circle_core::harness::{
    csv_string, preset, run_experiment, summarize, write_csv, ExperimentConfig, Method, Sweep,
    SweepVariable,
};
use circle_core::Error;

fn small() -> ExperimentConfig {
    ExperimentConfig {
        n_antennas: 8,
        n_devices: Some(6),
        snr_db: Some(10.0),
        n_subcarriers: 2,
        cp_len: 1,
        q_levels: 32,
        n_trials: 3,
        seed: 5,
        methods: vec![Method::RCircle, Method::Bound],
        ..ExperimentConfig::default()
    }
}

#[test]
fn one_row_per_trial_and_method() {
    let cfg = small();
    let rs = run_experiment(&cfg, 1).unwrap();
    let s = csv_string(&rs, cfg.sweep_variable());
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(lines[0], "trial,method,n_devices,sum_se,psi,wall_time_s");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    assert!(s.ends_with('\n') && !s.contains('\r'));
}

#[test]
fn empty_results_give_header_only() {
    assert_eq!(
        csv_string(&[], SweepVariable::Delta2Db),
        "trial,method,delta2_db,sum_se,psi,wall_time_s\n"
    );
}

#[test]
fn same_seed_same_bytes_new_seed_new_bytes() {
    let cfg = small();
    let a = csv_string(&run_experiment(&cfg, 1).unwrap(), cfg.sweep_variable());
    let b = csv_string(&run_experiment(&cfg, 1).unwrap(), cfg.sweep_variable());
    assert_eq!(a, b);
    let other = ExperimentConfig { seed: 6, ..cfg.clone() };
    let c = csv_string(&run_experiment(&other, 1).unwrap(), other.sweep_variable());
    assert_ne!(a, c);
}

#[test]
fn mean_is_thread_invariant() {
    let mut cfg = preset("fig4a", false).unwrap();
    cfg.n_trials = 6;
    let one = summarize(&run_experiment(&cfg, 1).unwrap());
    let many = summarize(&run_experiment(&cfg, 3).unwrap());
    assert_eq!(one.len(), many.len());
    for (a, b) in one.iter().zip(&many) {
        assert_eq!((a.method, a.sweep_value), (b.method, b.sweep_value));
        assert!((a.mean - b.mean).abs() <= 1e-9 * a.mean.abs().max(1.0));
    }
}

#[test]
fn summary_matches_recomputation_from_csv() {
    let mut cfg = small();
    cfg.n_trials = 7;
    cfg.methods = vec![Method::RCircle, Method::Circle, Method::Mrt];
    cfg.sweep = Some(Sweep {
        variable: SweepVariable::SnrDb,
        values: vec![0.0, 20.0],
        antennas_follow_devices: false,
    });
    let rs = run_experiment(&cfg, 0).unwrap();
    let text = csv_string(&rs, cfg.sweep_variable());

    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for rec in reader.records() {
        let rec = rec.unwrap();
        groups
            .entry((rec[2].to_string(), rec[1].to_string()))
            .or_default()
            .push(rec[3].parse().unwrap());
    }
    let summary = summarize(&rs);
    assert_eq!(summary.len(), groups.len());
    for row in &summary {
        let key = (
            circle_core::harness::format_float(row.sweep_value),
            row.method.as_str().to_string(),
        );
        let xs = &groups[&key];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert_eq!(row.trials, xs.len());
        assert!((row.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0), "{row:?} vs {mean}");
        assert!((row.std_err - se).abs() <= 1e-9 * se.max(1.0), "{row:?} vs {se}");
    }
}

#[test]
fn write_csv_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    match write_csv(&[], SweepVariable::NDevices, &path) {
        Err(err @ Error::Io { .. }) => assert!(err.to_string().contains("out.csv")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
    let ok = dir.path().join("out.csv");
    let rs = run_experiment(&small(), 1).unwrap();
    write_csv(&rs, SweepVariable::NDevices, &ok).unwrap();
    assert_eq!(
        std::fs::read_to_string(&ok).unwrap(),
        csv_string(&rs, SweepVariable::NDevices)
    );
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    let cfg = preset("fig6", false).unwrap();
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    let back = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(back.to_toml_string().unwrap(), cfg.to_toml_string().unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let both = "n_antennas = 8\nsnr_db = 10.0\np_t_db = 0.0\n";
    assert!(matches!(ExperimentConfig::from_toml_str(both), Err(Error::Config(_))));
    let unknown = "n_antennas = 8\nsnr_db = 10.0\nantennas = 4\n";
    assert!(ExperimentConfig::from_toml_str(unknown).is_err());
    let crowded = "n_antennas = 8\nn_devices = 7\nsnr_db = 10.0\nmethods = [\"circle\"]\n";
    assert!(ExperimentConfig::from_toml_str(crowded).is_err());
    let feedback = "n_antennas = 8\nsnr_db = 10.0\nmethods = [\"wo-csit-feedback\"]\n";
    assert!(matches!(
        ExperimentConfig::from_toml_str(feedback),
        Err(Error::UnavailableBaseline(_))
    ));
    let missing = ExperimentConfig::from_file(std::path::Path::new("/nonexistent/exp.toml"));
    assert!(matches!(missing, Err(Error::Io { .. })));
}
