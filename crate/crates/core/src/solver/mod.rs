//! Time integration of the geometric equation `d_t u = -u ^ (-Delta)^s u`,
//! of its stereographic scalar form, and the Duhamel fixed-point iteration.
//!
//! The free propagator is `S(t) = exp(-i t (-Delta)^s)`, so free waves are
//! `e^{i(xi.x - |xi|^{2s} t)}`.

mod geometric;
mod picard;
mod scalar;
mod snapshot;

pub use geometric::{step_geometric, GeometricStepper};
pub use picard::{picard_iterate, time_taper, PicardOutcome, PicardResult};
pub use scalar::{free_evolution, step_scalar, ScalarStepper};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use num_complex::Complex;
use thiserror::Error;

use crate::littlewood_paley::{besov_distance_to_point, besov_norm, CutoffFamily, LpError, Trajectory};
use crate::nonlinearity::NonlinError;
use crate::scalar::{c, Real};
use crate::spectral::{ComplexField, Dealias, Grid, SpectralError};
use crate::stereographic::{GeometryError, SphereField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unstable at step {step} (t = {t:.6}): {detail}; reduce dt")]
    Instability { step: usize, t: f64, detail: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Decomposition(#[from] LpError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Time integrator for the scalar equation. The geometric equation always
/// uses classical RK4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Integrating-factor RK4.
    Rk4,
    ExpEuler,
    #[default]
    EtdRk4,
}

impl std::str::FromStr for Integrator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "exp_euler" => Ok(Self::ExpEuler),
            "etd_rk4" => Ok(Self::EtdRk4),
            other => Err(format!("unknown integrator '{other}' (rk4, exp_euler, etd_rk4)")),
        }
    }
}

/// Largest accepted final time.
pub const MAX_TIME: f64 = 8.0;
/// Largest growth of `max | 1 - |u|^2 |` tolerated in a single step.
pub const STEP_DRIFT_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimConfig<T> {
    pub dim: usize,
    pub n: usize,
    pub box_period: T,
    pub s: T,
    pub dt: T,
    pub t_final: T,
    /// Besov regularity of the recorded diagnostics.
    pub sigma: T,
    pub integrator: Integrator,
    pub renormalize: bool,
    pub dealias: Dealias,
    pub seed: u64,
    pub amplitude: T,
    /// Steps between recorded frames.
    pub stride: usize,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 32,
            box_period: T::PI() + T::PI(),
            s: c(0.75),
            dt: c(1e-3),
            t_final: T::one(),
            sigma: c(2.0),
            integrator: Integrator::EtdRk4,
            renormalize: false,
            dealias: Dealias::TwoThirds,
            seed: 0,
            amplitude: c(1e-2),
            stride: 10,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn grid(&self) -> Result<Grid<T>, SolverError> {
        Ok(Grid::with_period(self.dim, self.n, self.box_period)?)
    }

    /// Number of steps covering `[0, t_final]`.
    pub fn steps(&self) -> Result<usize, SolverError> {
        let ratio = (self.t_final / self.dt).to_f64_lossy();
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(SolverError::Config(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    /// `0.5 (2 pi / P * N / 3)^{-2s}`.
    pub fn dt_guard(&self) -> T {
        let k = (T::PI() + T::PI()) / self.box_period * T::from_usize_lossy(self.n) / c(3.0);
        c::<T>(0.5) * k.powf(-(self.s + self.s))
    }

    /// Hard errors for inconsistent settings; soft findings come back as
    /// warnings.
    pub fn validate(&self) -> Result<Vec<String>, SolverError> {
        crate::spectral::check_order(self.s)?;
        if !(self.dt > T::zero()) {
            return Err(SolverError::Config("dt must be positive".into()));
        }
        if !(self.t_final >= T::zero()) || self.t_final > c(MAX_TIME) {
            return Err(SolverError::Config(format!("t_final must lie in [0, {MAX_TIME}]")));
        }
        if self.stride == 0 {
            return Err(SolverError::Config("stride must be at least 1".into()));
        }
        if self.sigma < T::zero() {
            return Err(SolverError::Config("sigma must be nonnegative".into()));
        }
        self.grid()?;
        self.steps()?;
        let mut warnings = Vec::new();
        if self.dt > self.dt_guard() {
            warnings.push(format!(
                "dt = {} exceeds the phase-rotation guard {:.3e}",
                self.dt,
                self.dt_guard()
            ));
        }
        if self.s <= c(0.5) {
            warnings.push("the well-posedness theory covers s in (1/2, 1) only".into());
        }
        Ok(warnings)
    }
}

/// The exact rotating solution `u = (sin a cos phi, sin a sin phi, cos a)`,
/// `phi = xi_0.x - omega t`, `omega = cos a |xi_0|^{2s}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SpinWaveSpec<T> {
    pub alpha: T,
    /// Lattice index of `xi_0`.
    pub mode: [i32; 3],
}

impl<T: Real> SpinWaveSpec<T> {
    fn xi0(&self, grid: &Grid<T>) -> [T; 3] {
        self.mode.map(|m| grid.wavenumber_unit() * T::from_i32(m).unwrap())
    }

    pub fn omega(&self, grid: &Grid<T>, s: T) -> T {
        let xi = self.xi0(grid);
        let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        self.alpha.cos() * r2.powf(s)
    }

    fn phase(&self, grid: &Grid<T>, s: T, t: T, x: [T; 3]) -> T {
        let xi = self.xi0(grid);
        xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2] - self.omega(grid, s) * t
    }

    pub fn sphere(&self, grid: &Grid<T>, s: T, t: T) -> SphereField<T> {
        let len = grid.len();
        let (sa, ca) = self.alpha.sin_cos();
        let (mut u1, mut u2) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for i in 0..len {
            let (sp, cp) = self.phase(grid, s, t, grid.coords(i)).sin_cos();
            u1.push(sa * cp);
            u2.push(sa * sp);
        }
        let comps = [u1, u2, vec![ca; len]];
        SphereField::from_components_unchecked(grid, comps).expect("sizes agree")
    }

    /// The stereographic image `tan(a/2) e^{i phi}`.
    pub fn scalar(&self, grid: &Grid<T>, s: T, t: T) -> ComplexField<T> {
        let rho = (self.alpha * c(0.5)).tan();
        ComplexField::from_fn(grid, |x| Complex::from_polar(rho, self.phase(grid, s, t, x)))
    }
}

/// Initial state of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum State<T: Real> {
    Sphere(SphereField<T>),
    Scalar(ComplexField<T>),
}

impl<T: Real> State<T> {
    pub fn grid(&self) -> &Grid<T> {
        match self {
            State::Sphere(u) => u.grid(),
            State::Scalar(f) => f.grid(),
        }
    }
}

/// Per-frame diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrameDiagnostics<T> {
    pub t: T,
    /// `||f||_{B^sigma}` for scalar runs, `||u||_{B^sigma_Q}` for sphere runs.
    pub besov_sigma: T,
    /// `||f||_{L2}`, or `||u - Q||_{L2}` for sphere runs.
    pub l2: T,
    pub energy_s: T,
    /// `max | 1 - |u|^2 |`; zero for scalar runs.
    pub sphere_drift: T,
}

fn scalar_energy<T: Real>(f: &ComplexField<T>, s: T) -> T {
    let fh = f.to_spectral();
    let sym = fh.grid().fractional_symbol(s);
    fh.values()
        .iter()
        .zip(&sym)
        .fold(T::zero(), |a, (v, &m)| a + m * v.norm_sqr())
}

pub fn diagnostics<T: Real>(
    state: &State<T>,
    t: T,
    s: T,
    sigma: T,
    family: &CutoffFamily,
) -> Result<FrameDiagnostics<T>, SolverError> {
    Ok(match state {
        State::Scalar(f) => FrameDiagnostics {
            t,
            besov_sigma: besov_norm(f, sigma, family)?,
            l2: f.norm_l2(),
            energy_s: scalar_energy(f, s),
            sphere_drift: T::zero(),
        },
        State::Sphere(u) => {
            let q = [T::zero(), T::zero(), T::one()];
            let pole = SphereField::north_pole(u.grid());
            FrameDiagnostics {
                t,
                besov_sigma: besov_distance_to_point(u, q, sigma, family)?,
                l2: u.distance_l2(&pole),
                energy_s: u.energy(s)?,
                sphere_drift: u.sphere_drift(),
            }
        }
    })
}

/// Recorded frames of a run. If the run stopped early, `failure` says why
/// and the frames up to that point are kept.
#[derive(Debug, Clone)]
pub struct RunRecord<T: Real> {
    pub times: Vec<T>,
    pub frames: Vec<State<T>>,
    pub diagnostics: Vec<FrameDiagnostics<T>>,
    pub warnings: Vec<String>,
    pub failure: Option<SolverError>,
}

impl<T: Real> RunRecord<T> {
    pub fn last(&self) -> &State<T> {
        self.frames.last().expect("a run records its initial frame")
    }

    /// Scalar frames as a [`Trajectory`]; needs a power-of-two frame count.
    pub fn scalar_trajectory(&self) -> Result<Trajectory<T>, SolverError> {
        let frames: Vec<ComplexField<T>> = self
            .frames
            .iter()
            .map(|st| match st {
                State::Scalar(f) => Ok(f.clone()),
                State::Sphere(_) => Err(SolverError::Config("trajectory needs scalar frames".into())),
            })
            .collect::<Result<_, _>>()?;
        let grid = frames[0].grid().clone();
        Ok(Trajectory::new(&grid, self.times.clone(), frames)?)
    }

    /// Largest relative change of `E_s` from the first frame.
    pub fn energy_drift(&self) -> T {
        let e0 = self.diagnostics[0].energy_s;
        self.diagnostics.iter().fold(T::zero(), |m, d| {
            m.max((d.energy_s - e0).abs() / e0.abs().max(T::min_positive_value()))
        })
    }

    pub fn max_sphere_drift(&self) -> T {
        self.diagnostics.iter().fold(T::zero(), |m, d| m.max(d.sphere_drift))
    }
}

/// Integrates `initial` over `[0, t_final]`, recording every `stride` steps
/// and the final state.
pub fn run<T: Real>(cfg: &SimConfig<T>, initial: State<T>) -> Result<RunRecord<T>, SolverError> {
    let warnings = cfg.validate()?;
    let grid = cfg.grid()?;
    if initial.grid() != &grid {
        return Err(SolverError::Config(
            "initial data grid differs from the configured grid".into(),
        ));
    }
    let steps = cfg.steps()?;
    let family = CutoffFamily::new(&grid);
    let mut rec = RunRecord {
        times: vec![T::zero()],
        diagnostics: vec![diagnostics(&initial, T::zero(), cfg.s, cfg.sigma, &family)?],
        frames: vec![initial.clone()],
        warnings,
        failure: None,
    };
    let record = |rec: &mut RunRecord<T>, st: &State<T>, t: T| -> Result<(), SolverError> {
        rec.times.push(t);
        rec.diagnostics.push(diagnostics(st, t, cfg.s, cfg.sigma, &family)?);
        rec.frames.push(st.clone());
        Ok(())
    };
    match initial {
        State::Sphere(mut u) => {
            let stepper = GeometricStepper::new(&grid, cfg.s, cfg.dt, cfg.dealias, cfg.renormalize)?;
            for step in 1..=steps {
                match stepper.step(&u) {
                    Ok(next) => u = next,
                    Err(detail) => {
                        rec.failure = Some(SolverError::Instability {
                            step,
                            t: (cfg.dt * T::from_usize_lossy(step)).to_f64_lossy(),
                            detail,
                        });
                        return Ok(rec);
                    }
                }
                if step % cfg.stride == 0 || step == steps {
                    record(&mut rec, &State::Sphere(u.clone()), cfg.dt * T::from_usize_lossy(step))?;
                }
            }
        }
        State::Scalar(f) => {
            let stepper = ScalarStepper::new(&grid, cfg.s, cfg.dt, cfg.integrator, cfg.dealias)?;
            let mut v = f.into_spectral();
            for step in 1..=steps {
                match stepper.step_spectral(&v) {
                    Ok(next) => v = next,
                    Err(detail) => {
                        rec.failure = Some(SolverError::Instability {
                            step,
                            t: (cfg.dt * T::from_usize_lossy(step)).to_f64_lossy(),
                            detail,
                        });
                        return Ok(rec);
                    }
                }
                if step % cfg.stride == 0 || step == steps {
                    record(
                        &mut rec,
                        &State::Scalar(v.to_physical()),
                        cfg.dt * T::from_usize_lossy(step),
                    )?;
                }
            }
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let cfg = SimConfig::<f64>::default();
        assert!(cfg.validate().unwrap().is_empty());
        let bad = SimConfig {
            t_final: 9.0,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        let off_grid = SimConfig {
            t_final: 1.0005,
            ..cfg.clone()
        };
        assert!(off_grid.validate().is_err());
        let coarse = SimConfig {
            dt: 0.1,
            t_final: 1.0,
            ..cfg.clone()
        };
        assert_eq!(coarse.validate().unwrap().len(), 1);
        assert!("etd_rk4".parse::<Integrator>().is_ok());
        assert!("euler".parse::<Integrator>().is_err());
    }

    #[test]
    fn spin_wave_images_agree() {
        let g = Grid::<f64>::new(1, 16).unwrap();
        let spec = SpinWaveSpec {
            alpha: std::f64::consts::FRAC_PI_4,
            mode: [2, 0, 0],
        };
        let s = 0.75;
        assert!((spec.omega(&g, s) - std::f64::consts::FRAC_1_SQRT_2 * 2f64.powf(1.5)).abs() < 1e-14);
        let u = spec.sphere(&g, s, 0.3);
        let f = crate::stereographic::project(&u).unwrap();
        assert!(crate::spectral::relative_l2(&f, &spec.scalar(&g, s, 0.3)) < 1e-14);
    }

    #[test]
    fn instability_keeps_the_partial_run() {
        let cfg = SimConfig {
            dim: 1,
            n: 32,
            dt: 0.5,
            t_final: 4.0,
            stride: 1,
            dealias: Dealias::Off,
            ..SimConfig::default()
        };
        let g = cfg.grid().unwrap();
        let f = crate::datagen::random_field(&g, 6.0, 3.0, 1);
        let rec = run(&cfg, State::Sphere(crate::stereographic::lift(&f))).unwrap();
        assert!(matches!(rec.failure, Some(SolverError::Instability { .. })));
        assert_eq!(rec.frames.len(), rec.diagnostics.len());
    }
}
