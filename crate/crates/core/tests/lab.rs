use proptest::prelude::*;
use smap::lab::{
    exp_identities, exp_reduction_residual, exp_simulate, simulate, LabConfig, LabError, OutputFormat, SpinData,
    Thresholds, CONFIG_KEYS, THRESHOLDS_FILE,
};

fn small() -> LabConfig {
    LabConfig::parse(
        "[grid]\ndim = 1\nn = 16\n[integrator]\ndt = 0.01\nt_final = 0.2\nstride = 5\n[experiment]\nsamples = 3\n",
    )
    .unwrap()
}

#[test]
fn every_key_has_a_documented_default() {
    let defaults = LabConfig::default();
    let text = defaults.to_text();
    for (sec, key, _, meaning) in CONFIG_KEYS {
        assert!(!meaning.is_empty());
        assert!(
            text.contains(&format!("[{sec}]")) && text.contains(&format!("\n{key} = ")),
            "{sec}.{key}"
        );
    }
    assert_eq!(LabConfig::parse(&text).unwrap(), defaults);
}

#[test]
fn configuration_errors_map_to_exit_code_two() {
    for text in [
        "[grid]\nn = 12\n",
        "[grid]\nmesh = 8\n",
        "[solver]\ndt = 0.1\n",
        "dt = 0.1\n",
        "[integrator]\ndt = 0.1\ndt = 0.2\n",
        "[integrator]\nscheme = leapfrog\n",
        "[integrator]\ndt = 0.3\nt_final = 1\n",
        "[physics]\ns = 1.5\n",
        "[experiment]\nspin_mode = 1,2\n",
        "[experiment]\npicard_dt = 0.3\n",
    ] {
        let err = LabConfig::parse(text).expect_err(text);
        assert!(matches!(err, LabError::Config(_)), "{text}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn thresholds_file_parses() {
    let th = Thresholds::parse(THRESHOLDS_FILE).unwrap();
    assert_eq!(th.get("picard.ratio"), 0.5);
    assert_eq!(th.get("norms.ratio"), 4.0);
    assert_eq!(th.get("cross.halving_factor"), 8.0);
    assert!(th.names().count() > 20);
}

#[test]
fn reports_are_deterministic() {
    let cfg = small();
    let th = Thresholds::default();
    let strip = |mut r: smap::lab::ExperimentReport| {
        r.provenance.wall_time_s = 0.0;
        r.metrics.retain(|m| m.name != "runtime_s");
        r
    };
    assert_eq!(
        strip(exp_simulate(&cfg, &th).unwrap()),
        strip(exp_simulate(&cfg, &th).unwrap())
    );
    assert_eq!(strip(exp_identities(&cfg, &th)), strip(exp_identities(&cfg, &th)));
    let a = strip(exp_reduction_residual(&cfg, &th).unwrap());
    assert_eq!(a.metric("reduction_residual_max").unwrap().pass, Some(true));
    assert_eq!(a, strip(exp_reduction_residual(&cfg, &th).unwrap()));
    let other = LabConfig { seed: 1, ..cfg };
    assert_ne!(
        strip(exp_simulate(&other, &th).unwrap()).metrics,
        strip(exp_simulate(&small(), &th).unwrap()).metrics
    );
}

#[test]
fn json_report_has_stable_field_order() {
    let report = exp_simulate(&small(), &Thresholds::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = report.save(dir.path(), OutputFormat::Json).unwrap();
    assert_eq!(written.len(), 2);
    let text = std::fs::read_to_string(&written[0]).unwrap();
    let order = [
        "experiment",
        "config",
        "metrics",
        "notes",
        "pass",
        "instability",
        "provenance",
    ];
    let positions: Vec<usize> = order
        .iter()
        .map(|k| text.find(&format!("\n  \"{k}\"")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["config"]["grid.n"], "16");
    assert_eq!(value["provenance"]["seed"], 0);
    let keys: Vec<&String> = value["config"].as_object().unwrap().keys().collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn csv_outputs_have_the_documented_headers() {
    let report = exp_simulate(&small(), &Thresholds::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = report.save(dir.path(), OutputFormat::Csv).unwrap();
    let summary = std::fs::read_to_string(&written[0]).unwrap();
    assert!(summary.starts_with("metric,value,threshold,pass\n"));
    assert_eq!(summary.lines().count(), report.metrics.len() + 1);
    let series = std::fs::read_to_string(&written[1]).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("t,besov_sigma,l2,energy_s,sphere_drift"));
    // frames at 0, 5, 10, 15, 20 steps
    assert_eq!(lines.count(), 5);
}

#[test]
fn instability_sets_exit_code_three() {
    let cfg = LabConfig::parse(
        "[grid]\ndim = 1\nn = 32\n[physics]\namplitude = 2\n[integrator]\nformulation = geometric\ndt = 0.5\nt_final = 2\ndealias = off\n",
    )
    .unwrap();
    let report = exp_simulate(&cfg, &Thresholds::default()).unwrap();
    assert!(report.instability.is_some());
    assert!(!report.pass);
    assert_eq!(report.exit_code(), 3);
}

#[test]
fn spin_wave_simulation_matches_the_exact_solution() {
    let mut cfg = small();
    cfg.data = SpinData::SpinWave;
    cfg.n = 32;
    for geometric in [false, true] {
        cfg.geometric = geometric;
        let (report, last) = simulate(&cfg, None).unwrap();
        assert!(report.metric("spin_wave_rel_error").unwrap().value < 1e-8);
        assert!((last.t - 0.2).abs() < 1e-12);
        let (again, _) = simulate(&cfg, Some(last.field.clone())).unwrap();
        assert!(again.metric("spin_wave_rel_error").is_none());
    }
    let wrong = smap::datagen::random_field::<f64>(&smap::Grid::new(2, 8).unwrap(), 1.0, 0.1, 0);
    assert!(matches!(simulate(&cfg, Some(wrong)), Err(LabError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn configuration_text_round_trips(
        dim in 1usize..=3,
        n in prop::sample::select(vec![8usize, 16, 32]),
        s in 0.3f64..=1.0,
        seed in any::<u64>(),
        geometric in any::<bool>(),
    ) {
        let cfg = LabConfig { dim, n, s, seed, geometric, ..LabConfig::default() };
        prop_assert_eq!(LabConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
