use std::collections::BTreeMap;

use ini::Ini;

use super::LabError;

/// The thresholds file compiled into the library.
pub const THRESHOLDS_FILE: &str = include_str!("../../thresholds.cfg");

/// Named acceptance bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    values: BTreeMap<String, f64>,
}

impl Thresholds {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let ini = Ini::load_from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        let section = ini
            .section(Some("thresholds"))
            .ok_or_else(|| LabError::Config("missing [thresholds] section".into()))?;
        let mut values = BTreeMap::new();
        for (k, v) in section.iter() {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| LabError::Config(format!("threshold {k}: cannot parse '{v}'")))?;
            if values.insert(k.to_string(), x).is_some() {
                return Err(LabError::Config(format!("threshold {k} repeated")));
            }
        }
        Ok(Self { values })
    }

    /// Panics on a missing name: the compiled-in file is checked by tests.
    pub fn get(&self, name: &str) -> f64 {
        *self
            .values
            .get(name)
            .unwrap_or_else(|| panic!("threshold '{name}' missing from the thresholds file"))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::parse(THRESHOLDS_FILE).expect("compiled thresholds parse")
    }
}
