use std::path::{Path, PathBuf};

use super::{ExperimentReport, LabError, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (csv, json)")),
        }
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(std::io::Error::other(e))
}

/// Pretty JSON of the report; field order follows the struct.
pub fn write_json(report: &ExperimentReport, path: &Path) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| LabError::Io(e.into()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// One row per metric: `metric, value, threshold, pass`.
pub fn write_summary_csv(report: &ExperimentReport, path: &Path) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["metric", "value", "threshold", "pass"])
        .map_err(csv_err)?;
    for m in &report.metrics {
        let bound = m.bound.map(|b| b.to_string()).unwrap_or_default();
        let pass = m.pass.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([m.name.as_str(), &format!("{:e}", m.value), &bound, &pass])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `t, besov_sigma, l2, energy_s, sphere_drift`.
pub fn write_series_csv(series: &Series, path: &Path) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "besov_sigma", "l2", "energy_s", "sphere_drift"])
        .map_err(csv_err)?;
    for d in &series.frames {
        w.write_record([d.t, d.besov_sigma, d.l2, d.energy_s, d.sphere_drift].map(|x| format!("{x:e}")))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

impl ExperimentReport {
    /// Writes the report into `dir` and returns the files written: a JSON
    /// report, or a summary CSV plus one CSV per time series.
    pub fn save(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>, LabError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        match format {
            OutputFormat::Json => {
                let p = dir.join(format!("{}.json", self.experiment));
                write_json(self, &p)?;
                written.push(p);
            }
            OutputFormat::Csv => {
                let p = dir.join(format!("{}_summary.csv", self.experiment));
                write_summary_csv(self, &p)?;
                written.push(p);
            }
        }
        for s in &self.series {
            let p = dir.join(format!("{}_{}.csv", self.experiment, s.name));
            write_series_csv(s, &p)?;
            written.push(p);
        }
        Ok(written)
    }
}
