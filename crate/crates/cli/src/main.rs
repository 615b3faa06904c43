use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use smap::lab::{self, ExperimentReport, LabConfig, LabError, OutputFormat, Thresholds};
use smap::solver::{read_snapshot, write_snapshot, Snapshot};

#[derive(Parser)]
#[command(
    name = "smap",
    version,
    about = "Experiments for the fractional Schrödinger map flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Configuration file; unspecified keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "json")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Stereographic identities on random samples.
    Identities,
    /// Taylor remainder, pairing and decay checks for the commutator.
    Taylor,
    /// Bounds for the modulation multiplier.
    Multiplier,
    /// Partition of unity and block reproduction.
    Partition,
    /// Reduction residual and cross-formulation consistency.
    ReduceCheck,
    /// A single configured run.
    Simulate {
        /// Initial data in the stereographic chart, as a snapshot file.
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Writes the final state as a snapshot file.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Persistence of the Besov norm.
    Norms,
    /// Lipschitz dependence on the initial data.
    Lipschitz,
    /// Contraction of the Picard iteration.
    Picard,
    /// Temporal convergence and conservation.
    Convergence,
    /// Every experiment except `simulate`.
    All,
}

fn load_config(common: &Common) -> Result<LabConfig, LabError> {
    let mut cfg = match &common.config {
        Some(path) => LabConfig::load(path)?,
        None => LabConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_initial(path: &Path) -> Result<Snapshot<f64>, LabError> {
    let file = File::open(path)?;
    read_snapshot(BufReader::new(file)).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

fn save_final(path: &Path, snap: &Snapshot<f64>) -> Result<(), LabError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_snapshot(BufWriter::new(File::create(path)?), snap).map_err(|e| LabError::Numerical(e.to_string()))
}

fn execute(command: &Command, cfg: &LabConfig, th: &Thresholds) -> Result<ExperimentReport, LabError> {
    let started = Instant::now();
    match command {
        Command::Identities => Ok(lab::exp_identities(cfg, th)),
        Command::Taylor => lab::exp_taylor(cfg, th),
        Command::Multiplier => lab::exp_multiplier(cfg, th),
        Command::Partition => lab::exp_partition(cfg, th),
        Command::ReduceCheck => {
            let parts = vec![
                lab::exp_reduction_residual(cfg, th)?,
                lab::exp_reduction_equivalence(cfg, th)?,
            ];
            Ok(ExperimentReport::aggregate("reduce_check", cfg, parts, started))
        }
        Command::Simulate { initial, snapshot } => {
            let initial = initial.as_deref().map(load_initial).transpose()?;
            if let Some(snap) = &initial {
                if snap.s != cfg.s {
                    eprintln!("warning: snapshot s = {} differs from configured s = {}", snap.s, cfg.s);
                }
            }
            let (report, last) = lab::simulate(cfg, initial.map(|snap| snap.field))?;
            if let Some(path) = snapshot {
                save_final(path, &last)?;
            }
            Ok(report)
        }
        Command::Norms => lab::exp_norm_persistence(cfg, th),
        Command::Lipschitz => lab::exp_lipschitz(cfg, th),
        Command::Picard => lab::exp_picard_contraction(cfg, th),
        Command::Convergence => lab::exp_convergence(cfg, th),
        Command::All => {
            let parts = vec![
                lab::exp_static_suites(cfg, th)?,
                lab::exp_reduction_residual(cfg, th)?,
                lab::exp_reduction_equivalence(cfg, th)?,
                lab::exp_convergence(cfg, th)?,
                lab::exp_norm_persistence(cfg, th)?,
                lab::exp_lipschitz(cfg, th)?,
                lab::exp_picard_contraction(cfg, th)?,
            ];
            Ok(ExperimentReport::aggregate("all", cfg, parts, started))
        }
    }
}

fn print_report(report: &ExperimentReport) {
    for m in &report.metrics {
        let verdict = match m.pass {
            Some(true) => "ok",
            Some(false) => "FAIL",
            None => "",
        };
        let bound = m.bound.map(|b| b.to_string()).unwrap_or_default();
        println!("{:<48} {:>12.4e}  {:<28} {verdict}", m.name, m.value, bound);
    }
    if let Some(why) = &report.instability {
        println!("instability: {why}");
    }
    println!("{}: {}", report.experiment, if report.pass { "pass" } else { "fail" });
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| {
        let cfg = load_config(&cli.common)?;
        if let Some(k) = cli.common.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| LabError::Config(format!("--threads: {e}")))?;
        }
        let report = execute(&cli.command, &cfg, &Thresholds::default())?;
        let written = report.save(&cli.common.out, cli.common.format)?;
        print_report(&report);
        for path in written {
            println!("wrote {}", path.display());
        }
        Ok::<_, LabError>(report.exit_code())
    })();
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
