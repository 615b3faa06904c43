//! Experiment drivers, configuration and report persistence.
//!
//! Every experiment returns an [`ExperimentReport`]: named metrics, each
//! with an optional bound from the thresholds file, plus the configuration
//! it ran with and provenance.

mod config;
mod experiments;
mod output;
mod suites;
mod thresholds;

pub use config::{LabConfig, SpinData, CONFIG_KEYS};
pub use experiments::{
    exp_convergence, exp_lipschitz, exp_norm_persistence, exp_picard_contraction, exp_reduction_equivalence,
    exp_reduction_residual, exp_simulate, simulate,
};
pub use output::{write_json, write_series_csv, write_summary_csv, OutputFormat};
pub use suites::{exp_identities, exp_multiplier, exp_partition, exp_static_suites, exp_taylor};
pub use thresholds::{Thresholds, THRESHOLDS_FILE};

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::solver::{FrameDiagnostics, SolverError};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit status: 2 for configuration problems, 3 for instability.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Instability(_) => 3,
            LabError::Numerical(_) | LabError::Io(_) => 1,
        }
    }
}

impl From<SolverError> for LabError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(m) => LabError::Config(m),
            SolverError::Instability { .. } => LabError::Instability(e.to_string()),
            other => LabError::Numerical(other.to_string()),
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for LabError {
            fn from(e: $t) -> Self {
                LabError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(
    crate::spectral::SpectralError,
    crate::stereographic::GeometryError,
    crate::nonlinearity::NonlinError,
    crate::commutator::CommutatorError,
    crate::littlewood_paley::LpError,
    crate::dispersion::DispersionError
);

/// Acceptance bound attached to a metric.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { value: f64 },
    AtLeast { value: f64 },
    Within { lo: f64, hi: f64 },
}

impl Bound {
    pub fn admits(&self, x: f64) -> bool {
        match *self {
            Bound::AtMost { value } => x <= value,
            Bound::AtLeast { value } => x >= value,
            Bound::Within { lo, hi } => x >= lo && x <= hi,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::AtMost { value } => write!(f, "<= {value:e}"),
            Bound::AtLeast { value } => write!(f, ">= {value:e}"),
            Bound::Within { lo, hi } => write!(f, "in [{lo:e}, {hi:e}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub bound: Option<Bound>,
    /// `None` for metrics that are only logged.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

/// A named time series of run diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Series {
    pub name: String,
    pub frames: Vec<FrameDiagnostics<f64>>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub metrics: Vec<Metric>,
    pub notes: Vec<String>,
    pub pass: bool,
    /// Set when a run stopped on the instability guard.
    pub instability: Option<String>,
    pub provenance: Provenance,
    #[serde(skip)]
    pub series: Vec<Series>,
}

impl ExperimentReport {
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Process exit status: 0 pass, 1 threshold failure, 3 instability.
    pub fn exit_code(&self) -> i32 {
        if self.instability.is_some() {
            3
        } else if self.pass {
            0
        } else {
            1
        }
    }

    /// Names of failed metrics.
    pub fn failures(&self) -> Vec<&str> {
        self.metrics
            .iter()
            .filter(|m| m.pass == Some(false))
            .map(|m| m.name.as_str())
            .collect()
    }

    /// Folds several reports into one, prefixing metric names.
    pub fn aggregate(experiment: &str, cfg: &LabConfig, parts: Vec<ExperimentReport>, started: Instant) -> Self {
        let mut b = ReportBuilder::new(experiment, cfg);
        b.started = started;
        let parts_instability = parts.iter().find_map(|p| p.instability.clone());
        for p in parts {
            for m in p.metrics {
                b.push(Metric {
                    name: format!("{}.{}", p.experiment, m.name),
                    ..m
                });
            }
            b.notes
                .extend(p.notes.into_iter().map(|n| format!("{}: {n}", p.experiment)));
            b.series.extend(p.series);
        }
        let mut report = b.finish();
        report.pass &= parts_instability.is_none();
        report.instability = parts_instability;
        report
    }
}

/// Accumulates metrics for one experiment.
pub(crate) struct ReportBuilder {
    experiment: String,
    config: BTreeMap<String, String>,
    metrics: Vec<Metric>,
    notes: Vec<String>,
    series: Vec<Series>,
    seed: u64,
    started: Instant,
}

impl ReportBuilder {
    pub(crate) fn new(experiment: &str, cfg: &LabConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config: cfg.echo(),
            metrics: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
            seed: cfg.seed,
            started: Instant::now(),
        }
    }

    fn push(&mut self, m: Metric) {
        assert!(
            self.metric_names().all(|n| n != m.name),
            "metric {} reported twice",
            m.name
        );
        self.metrics.push(m);
    }

    fn metric_names(&self) -> impl Iterator<Item = &str> {
        self.metrics.iter().map(|m| m.name.as_str())
    }

    pub(crate) fn check(&mut self, name: &str, value: f64, bound: Bound) -> bool {
        let pass = bound.admits(value);
        self.push(Metric {
            name: name.into(),
            value,
            bound: Some(bound),
            pass: Some(pass),
        });
        pass
    }

    pub(crate) fn log(&mut self, name: &str, value: f64) {
        self.push(Metric {
            name: name.into(),
            value,
            bound: None,
            pass: None,
        });
    }

    pub(crate) fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub(crate) fn series(&mut self, name: &str, frames: &[FrameDiagnostics<f64>]) {
        self.series.push(Series {
            name: name.into(),
            frames: frames.to_vec(),
        });
    }

    pub(crate) fn finish(self) -> ExperimentReport {
        let pass = self.metrics.iter().all(|m| m.pass != Some(false));
        ExperimentReport {
            experiment: self.experiment,
            config: self.config,
            metrics: self.metrics,
            notes: self.notes,
            pass,
            instability: None,
            provenance: Provenance {
                seed: self.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s: self.started.elapsed().as_secs_f64(),
            },
            series: self.series,
        }
    }
}
