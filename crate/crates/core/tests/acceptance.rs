//! Runs every acceptance criterion at its stated tolerance and prints one
//! line per criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use smap::lab::{self, ExperimentReport, LabConfig, Thresholds};

struct Criterion {
    label: &'static str,
    checks: Vec<(String, f64, bool)>,
}

impl Criterion {
    fn new(label: &'static str) -> Self {
        Self {
            label,
            checks: Vec::new(),
        }
    }

    fn take(mut self, report: &ExperimentReport, names: &[&str]) -> Self {
        for name in names {
            let m = report
                .metric(name)
                .unwrap_or_else(|| panic!("{}: metric {name} missing", report.experiment));
            self.checks.push((name.to_string(), m.value, m.pass == Some(true)));
        }
        self
    }

    fn with(mut self, name: &str, value: f64, pass: bool) -> Self {
        self.checks.push((name.into(), value, pass));
        self
    }

    fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.2)
    }

    fn line(&self) -> String {
        let detail: Vec<String> = self
            .checks
            .iter()
            .map(|(n, v, ok)| format!("{n}={v:.3e}{}", if *ok { "" } else { " (!)" }))
            .collect();
        format!(
            "[{}] {}: {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.label,
            detail.join(", ")
        )
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cfg = LabConfig::default();
    let th = Thresholds::default();
    let run = |r: Result<ExperimentReport, lab::LabError>| r.unwrap_or_else(|e| panic!("{e}"));

    let statics = run(lab::exp_static_suites(&cfg, &th));
    let residual = run(lab::exp_reduction_residual(&cfg, &th));
    let equivalence = run(lab::exp_reduction_equivalence(&cfg, &th));
    let convergence = run(lab::exp_convergence(&cfg, &th));
    let norms = run(lab::exp_norm_persistence(&cfg, &th));
    let lipschitz = run(lab::exp_lipschitz(&cfg, &th));
    let picard = run(lab::exp_picard_contraction(&cfg, &th));
    let elapsed = started.elapsed().as_secs_f64();

    let identities: Vec<String> = (1..=6)
        .map(|i| format!("identities.identity_{i}_max_residual"))
        .collect();
    let identities: Vec<&str> = identities.iter().map(String::as_str).collect();
    let criteria = [
        Criterion::new("1 stereographic identities")
            .take(&statics, &identities)
            .take(&statics, &["identities.runtime_s"]),
        Criterion::new("2 reduction identity").take(&residual, &["reduction_residual_max", "refinement_ratio_max"]),
        Criterion::new("3 spin-wave exactness").take(&convergence, &["spin_wave_rel_error", "rk4_order"]),
        Criterion::new("4 cross-formulation")
            .take(&equivalence, &["spin_wave_discrepancy", "spin_wave_halving_factor"]),
        Criterion::new("5 conservation").take(&convergence, &["energy_drift", "sphere_drift"]),
        Criterion::new("6 taylor machinery").take(
            &statics,
            &[
                "taylor.fd_max_rel_error",
                "taylor.pairing_mismatches",
                "taylor.decay_ratio_over_separation",
            ],
        ),
        Criterion::new("7 dispersion multiplier").take(
            &statics,
            &[
                "multiplier.factorization_residual_max",
                "multiplier.n_range_fraction_min",
                "multiplier.comparability_ratio_min",
                "multiplier.comparability_ratio_max",
            ],
        ),
        Criterion::new("8 littlewood-paley").take(
            &statics,
            &[
                "partition.partition_defect",
                "partition.block_reproduction_error",
                "partition.negative_control_defect",
            ],
        ),
        Criterion::new("9 well-posedness stand-ins")
            .take(&norms, &["ratio_max", "monotonicity"])
            .take(&lipschitz, &["ratio_max", "stability"])
            .take(&picard, &["ratio_eps_1e-2", "eps_squared_scaling"])
            .with("suite_runtime_s", elapsed, elapsed <= 600.0),
    ];

    for c in &criteria {
        println!("{}", c.line());
    }
    let sweep = statics.metric("seed_sweep_failures").expect("seed sweep");
    println!("seed sweep failures: {}", sweep.value);
    println!("total runtime: {elapsed:.1} s");
    if criteria.iter().all(Criterion::pass) && sweep.pass == Some(true) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
