use crate::scalar::{c, Real};
use crate::spectral::{check_order, Dealias, Grid};
use crate::stereographic::{geometric_rhs_symbol, SphereField, VectorField};

use super::{SolverError, STEP_DRIFT_LIMIT};

/// Classical RK4 for the geometric equation with a cached symbol.
#[derive(Debug, Clone)]
pub struct GeometricStepper<T: Real> {
    grid: Grid<T>,
    symbol: Vec<T>,
    dt: T,
    dealias: Dealias,
    renormalize: bool,
}

impl<T: Real> GeometricStepper<T> {
    pub fn new(grid: &Grid<T>, s: T, dt: T, dealias: Dealias, renormalize: bool) -> Result<Self, SolverError> {
        check_order(s)?;
        Ok(Self {
            grid: grid.clone(),
            symbol: grid.fractional_symbol(s),
            dt,
            dealias,
            renormalize,
        })
    }

    fn rhs(&self, comps: &VectorField<T>) -> VectorField<T> {
        let u = SphereField::from_components_unchecked(&self.grid, comps.clone()).expect("sizes agree");
        geometric_rhs_symbol(&u, &self.symbol, self.dealias)
    }

    /// One step. Fails with a description when the state leaves the sphere
    /// by more than [`STEP_DRIFT_LIMIT`] in one step or stops being finite.
    pub fn step(&self, u: &SphereField<T>) -> Result<SphereField<T>, String> {
        let dt = self.dt;
        let half = dt * c(0.5);
        let base = u.components();
        let axpy = |k: &VectorField<T>, a: T| -> VectorField<T> {
            std::array::from_fn(|l| base[l].iter().zip(&k[l]).map(|(&x, &y)| x + a * y).collect())
        };
        let k1 = self.rhs(base);
        let k2 = self.rhs(&axpy(&k1, half));
        let k3 = self.rhs(&axpy(&k2, half));
        let k4 = self.rhs(&axpy(&k3, dt));
        let sixth = dt / c(6.0);
        let two = c::<T>(2.0);
        let next: VectorField<T> = std::array::from_fn(|l| {
            (0..base[l].len())
                .map(|i| base[l][i] + sixth * (k1[l][i] + two * (k2[l][i] + k3[l][i]) + k4[l][i]))
                .collect()
        });
        let next = SphereField::from_components_unchecked(&self.grid, next).expect("sizes agree");
        let before = u.sphere_drift();
        let after = next.sphere_drift();
        if !after.is_finite() || after - before > c(STEP_DRIFT_LIMIT) {
            return Err(format!(
                "sphere drift grew from {before:.3e} to {after:.3e} in one step"
            ));
        }
        Ok(if self.renormalize { next.normalized() } else { next })
    }
}

/// One RK4 step of the geometric equation.
pub fn step_geometric<T: Real>(
    u: &SphereField<T>,
    dt: T,
    s: T,
    dealias: Dealias,
    renormalize: bool,
) -> Result<SphereField<T>, SolverError> {
    GeometricStepper::new(u.grid(), s, dt, dealias, renormalize)?
        .step(u)
        .map_err(|detail| SolverError::Instability {
            step: 1,
            t: dt.to_f64_lossy(),
            detail,
        })
}
