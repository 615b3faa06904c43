//! Lab configuration: `key = value` lines under `[grid]`, `[physics]`,
//! `[integrator]` and `[experiment]`. Unknown sections or keys are errors.

use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use ini::Ini;

use super::LabError;
use crate::solver::{Integrator, SimConfig, SpinWaveSpec};
use crate::spectral::Dealias;

/// `(section, key, default, meaning)` for every accepted key.
pub const CONFIG_KEYS: &[(&str, &str, &str, &str)] = &[
    ("grid", "dim", "3", "spatial dimension n (1, 2 or 3)"),
    ("grid", "n", "16", "samples per axis N (power of two)"),
    ("grid", "box_period", "6.283185307179586", "period of the torus"),
    ("physics", "s", "0.75", "order of the fractional Laplacian, in (0, 1]"),
    ("physics", "sigma", "2", "Besov regularity of the diagnostics"),
    ("physics", "amplitude", "0.01", "B^sigma size of random initial data"),
    ("physics", "xi_c", "1.5", "spectral envelope width of random data"),
    (
        "integrator",
        "scheme",
        "etd_rk4",
        "scalar integrator: rk4, exp_euler or etd_rk4",
    ),
    ("integrator", "formulation", "scalar", "simulate: scalar or geometric"),
    ("integrator", "dt", "0.001", "time step"),
    ("integrator", "t_final", "1", "final time, at most 8"),
    (
        "integrator",
        "renormalize",
        "off",
        "project |u| back to 1 after each geometric step",
    ),
    (
        "integrator",
        "dealias",
        "on",
        "two-thirds rule on scalar products: on, off or half",
    ),
    ("integrator", "stride", "10", "steps between recorded frames"),
    ("experiment", "seed", "0", "master seed"),
    (
        "experiment",
        "samples",
        "1000",
        "random fields per case in reduce-check",
    ),
    ("experiment", "seed_sweep", "10", "seeds in the static-suite sweep"),
    ("experiment", "data", "random", "simulate: random or spin_wave"),
    (
        "experiment",
        "spin_alpha",
        "0.7853981633974483",
        "spin-wave polar angle",
    ),
    ("experiment", "spin_mode", "2,0,0", "spin-wave lattice frequency"),
    (
        "experiment",
        "picard_dt",
        "0.015625",
        "time step of the Picard grid; must divide 2",
    ),
    ("experiment", "picard_iterations", "8", "Picard iterations"),
];

/// Initial data selector for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinData {
    Random,
    SpinWave,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub dim: usize,
    pub n: usize,
    pub box_period: f64,
    pub s: f64,
    pub sigma: f64,
    pub amplitude: f64,
    pub xi_c: f64,
    pub scheme: Integrator,
    pub geometric: bool,
    pub dt: f64,
    pub t_final: f64,
    pub renormalize: bool,
    pub dealias: Dealias,
    pub stride: usize,
    pub seed: u64,
    pub samples: usize,
    pub seed_sweep: usize,
    pub data: SpinData,
    pub spin_alpha: f64,
    pub spin_mode: [i32; 3],
    pub picard_dt: f64,
    pub picard_iterations: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self::parse("").expect("defaults parse")
    }
}

fn parse_value<V: FromStr>(key: &str, raw: &str) -> Result<V, LabError> {
    raw.parse()
        .map_err(|_| LabError::Config(format!("{key}: cannot parse '{raw}'")))
}

fn parse_switch(key: &str, raw: &str) -> Result<bool, LabError> {
    match raw {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(LabError::Config(format!("{key}: expected on or off, got '{raw}'"))),
    }
}

impl LabConfig {
    /// Parses configuration text, filling unspecified keys with defaults.
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let ini = Ini::load_from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        let mut values: BTreeMap<(&'static str, &'static str), String> = CONFIG_KEYS
            .iter()
            .map(|(sec, key, default, _)| ((*sec, *key), default.to_string()))
            .collect();
        let mut seen = HashSet::new();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(LabError::Config(format!("key '{k}' appears before any section")));
                }
                continue;
            };
            if !CONFIG_KEYS.iter().any(|(sec, ..)| *sec == section) {
                return Err(LabError::Config(format!("unknown section [{section}]")));
            }
            for (key, value) in props.iter() {
                let Some((sec, k, ..)) = CONFIG_KEYS.iter().find(|(sec, k, ..)| *sec == section && *k == key) else {
                    return Err(LabError::Config(format!("unknown key '{key}' in [{section}]")));
                };
                if !seen.insert((*sec, *k)) {
                    return Err(LabError::Config(format!("key '{key}' repeated in [{section}]")));
                }
                values.insert((sec, k), value.trim().to_string());
            }
        }
        let get = |sec: &'static str, key: &'static str| values[&(sec, key)].as_str();
        let mode: Vec<i32> = get("experiment", "spin_mode")
            .split(',')
            .map(|p| parse_value("spin_mode", p.trim()))
            .collect::<Result<_, _>>()?;
        let spin_mode: [i32; 3] = mode
            .try_into()
            .map_err(|_| LabError::Config("spin_mode needs three integers".into()))?;
        let cfg = Self {
            dim: parse_value("dim", get("grid", "dim"))?,
            n: parse_value("n", get("grid", "n"))?,
            box_period: parse_value("box_period", get("grid", "box_period"))?,
            s: parse_value("s", get("physics", "s"))?,
            sigma: parse_value("sigma", get("physics", "sigma"))?,
            amplitude: parse_value("amplitude", get("physics", "amplitude"))?,
            xi_c: parse_value("xi_c", get("physics", "xi_c"))?,
            scheme: get("integrator", "scheme").parse().map_err(LabError::Config)?,
            geometric: match get("integrator", "formulation") {
                "scalar" => false,
                "geometric" => true,
                other => return Err(LabError::Config(format!("formulation: unknown '{other}'"))),
            },
            dt: parse_value("dt", get("integrator", "dt"))?,
            t_final: parse_value("t_final", get("integrator", "t_final"))?,
            renormalize: parse_switch("renormalize", get("integrator", "renormalize"))?,
            dealias: match get("integrator", "dealias") {
                "on" => Dealias::TwoThirds,
                "off" => Dealias::Off,
                "half" => Dealias::Half,
                other => return Err(LabError::Config(format!("dealias: unknown '{other}'"))),
            },
            stride: parse_value("stride", get("integrator", "stride"))?,
            seed: parse_value("seed", get("experiment", "seed"))?,
            samples: parse_value("samples", get("experiment", "samples"))?,
            seed_sweep: parse_value("seed_sweep", get("experiment", "seed_sweep"))?,
            data: match get("experiment", "data") {
                "random" => SpinData::Random,
                "spin_wave" => SpinData::SpinWave,
                other => return Err(LabError::Config(format!("data: unknown '{other}'"))),
            },
            spin_alpha: parse_value("spin_alpha", get("experiment", "spin_alpha"))?,
            spin_mode,
            picard_dt: parse_value("picard_dt", get("experiment", "picard_dt"))?,
            picard_iterations: parse_value("picard_iterations", get("experiment", "picard_iterations"))?,
        };
        cfg.sim_config()
            .validate()
            .map_err(|e| LabError::Config(e.to_string()))?;
        let half_steps = 2.0 / cfg.picard_dt;
        if !(cfg.picard_dt > 0.0) || (half_steps - half_steps.round()).abs() > 1e-9 || half_steps < 2.0 {
            return Err(LabError::Config(format!("picard_dt = {} must divide 2", cfg.picard_dt)));
        }
        if cfg.amplitude < 0.0 || !(cfg.xi_c > 0.0) {
            return Err(LabError::Config("amplitude must be >= 0 and xi_c > 0".into()));
        }
        if cfg.samples == 0 || cfg.seed_sweep == 0 {
            return Err(LabError::Config("samples and seed_sweep must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn sim_config(&self) -> SimConfig<f64> {
        SimConfig {
            dim: self.dim,
            n: self.n,
            box_period: self.box_period,
            s: self.s,
            dt: self.dt,
            t_final: self.t_final,
            sigma: self.sigma,
            integrator: self.scheme,
            renormalize: self.renormalize,
            dealias: self.dealias,
            seed: self.seed,
            amplitude: self.amplitude,
            stride: self.stride,
        }
    }

    pub fn spin_wave(&self) -> SpinWaveSpec<f64> {
        SpinWaveSpec {
            alpha: self.spin_alpha,
            mode: self.spin_mode,
        }
    }

    /// Flat `section.key -> value` view, as echoed into reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let dealias = match self.dealias {
            Dealias::Off => "off",
            Dealias::TwoThirds => "on",
            Dealias::Half => "half",
        };
        let scheme = match self.scheme {
            Integrator::Rk4 => "rk4",
            Integrator::ExpEuler => "exp_euler",
            Integrator::EtdRk4 => "etd_rk4",
        };
        let m = self.spin_mode;
        [
            ("grid.dim", self.dim.to_string()),
            ("grid.n", self.n.to_string()),
            ("grid.box_period", self.box_period.to_string()),
            ("physics.s", self.s.to_string()),
            ("physics.sigma", self.sigma.to_string()),
            ("physics.amplitude", self.amplitude.to_string()),
            ("physics.xi_c", self.xi_c.to_string()),
            ("integrator.scheme", scheme.to_string()),
            (
                "integrator.formulation",
                if self.geometric { "geometric" } else { "scalar" }.to_string(),
            ),
            ("integrator.dt", self.dt.to_string()),
            ("integrator.t_final", self.t_final.to_string()),
            (
                "integrator.renormalize",
                if self.renormalize { "on" } else { "off" }.to_string(),
            ),
            ("integrator.dealias", dealias.to_string()),
            ("integrator.stride", self.stride.to_string()),
            ("experiment.seed", self.seed.to_string()),
            ("experiment.samples", self.samples.to_string()),
            ("experiment.seed_sweep", self.seed_sweep.to_string()),
            (
                "experiment.data",
                match self.data {
                    SpinData::Random => "random",
                    SpinData::SpinWave => "spin_wave",
                }
                .to_string(),
            ),
            ("experiment.spin_alpha", self.spin_alpha.to_string()),
            ("experiment.spin_mode", format!("{},{},{}", m[0], m[1], m[2])),
            ("experiment.picard_dt", self.picard_dt.to_string()),
            ("experiment.picard_iterations", self.picard_iterations.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Renders the configuration in the file format.
    pub fn to_text(&self) -> String {
        let echo = self.echo();
        let mut out = String::new();
        let mut current = "";
        for (sec, key, _, meaning) in CONFIG_KEYS {
            if *sec != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{sec}]\n"));
                current = sec;
            }
            out.push_str(&format!("# {meaning}\n{key} = {}\n", echo[&format!("{sec}.{key}")]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = LabConfig::default();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.dealias, Dealias::TwoThirds);
        assert_eq!(LabConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.echo().len(), CONFIG_KEYS.len());
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        assert!(LabConfig::parse("[grid]\nn = 32\n").is_ok());
        for bad in [
            "[grid]\nsize = 32\n",
            "[mesh]\nn = 32\n",
            "n = 32\n",
            "[grid]\nn = 32\nn = 64\n",
            "[integrator]\nscheme = euler\n",
            "[grid]\nn = 12\n",
            "[integrator]\nt_final = 9\n",
        ] {
            let err = LabConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }
}
