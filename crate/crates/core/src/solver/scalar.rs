use num_complex::Complex;

use crate::nonlinearity::{total_symbol, NonlinOptions, MAX_AMPLITUDE};
use crate::scalar::{c, Real};
use crate::spectral::{check_order, ComplexField, Dealias, Grid, Representation};

use super::{Integrator, SolverError};

/// Contour points for the `phi` functions.
const CONTOUR_POINTS: usize = 32;

/// Exponential integrator for `d_t v = L v + N(v)` in Fourier variables,
/// `L = -i |xi|^{2s}`, `N = -i N(f)`. The linear part is applied exactly.
#[derive(Debug, Clone)]
pub struct ScalarStepper<T: Real> {
    grid: Grid<T>,
    symbol: Vec<T>,
    dt: T,
    integrator: Integrator,
    opts: NonlinOptions,
    e: Vec<Complex<T>>,
    e2: Vec<Complex<T>>,
    /// Integrator weights: `[h phi1(Lh)]` for exp-Euler, `[Q, f1, f2, f3]`
    /// for ETDRK4.
    weights: Vec<Vec<Complex<T>>>,
}

/// Contour mean of `g(z + r_j)` over the unit circle about `z`, which is
/// accurate for the removable singularities of the `phi` functions.
fn contour_mean<T: Real>(z: Complex<T>, g: impl Fn(Complex<T>) -> Complex<T>) -> Complex<T> {
    let m = T::from_usize_lossy(CONTOUR_POINTS);
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in 0..CONTOUR_POINTS {
        let theta = (T::PI() + T::PI()) * (T::from_usize_lossy(j) + c(0.5)) / m;
        acc += g(z + Complex::from_polar(T::one(), theta));
    }
    acc / m
}

impl<T: Real> ScalarStepper<T> {
    pub fn new(grid: &Grid<T>, s: T, dt: T, integrator: Integrator, dealias: Dealias) -> Result<Self, SolverError> {
        check_order(s)?;
        let symbol = grid.fractional_symbol(s);
        let lh: Vec<Complex<T>> = symbol.iter().map(|&m| Complex::new(T::zero(), -m * dt)).collect();
        let e = lh.iter().map(|z| z.exp()).collect();
        let e2 = lh.iter().map(|z| (*z * c::<T>(0.5)).exp()).collect();
        let one = Complex::new(T::one(), T::zero());
        let weights = match integrator {
            Integrator::Rk4 => Vec::new(),
            Integrator::ExpEuler => vec![lh
                .iter()
                .map(|&z| contour_mean(z, |w| (w.exp() - one) / w) * dt)
                .collect()],
            Integrator::EtdRk4 => {
                let k = |x: f64| Complex::new(c::<T>(x), T::zero());
                let (two, three, four) = (k(2.0), k(3.0), k(4.0));
                let q = lh
                    .iter()
                    .map(|&z| contour_mean(z, |w| ((w / two).exp() - one) / w) * dt)
                    .collect();
                let f1 = lh
                    .iter()
                    .map(|&z| {
                        contour_mean(z, |w| (-four - w + w.exp() * (four - w * three + w * w)) / (w * w * w)) * dt
                    })
                    .collect();
                let f2 = lh
                    .iter()
                    .map(|&z| contour_mean(z, |w| (two + w + w.exp() * (w - two)) / (w * w * w)) * dt)
                    .collect();
                let f3 = lh
                    .iter()
                    .map(|&z| {
                        contour_mean(z, |w| (-four - w * three - w * w + w.exp() * (four - w)) / (w * w * w)) * dt
                    })
                    .collect();
                vec![q, f1, f2, f3]
            }
        };
        Ok(Self {
            grid: grid.clone(),
            symbol,
            dt,
            integrator,
            opts: NonlinOptions::with_dealias(dealias),
            e,
            e2,
            weights,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// `-i N(f)` in Fourier variables for spectral input `v`.
    pub fn nonlinear(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>, String> {
        let mut buf = v.to_vec();
        self.grid.inverse_in_place(&mut buf);
        let limit = c::<T>(MAX_AMPLITUDE);
        if let Some((i, z)) = buf.iter().enumerate().find(|(_, z)| !(z.norm() <= limit)) {
            return Err(format!("|f| = {:.3e} at sample {i}", z.norm().to_f64_lossy()));
        }
        let f = ComplexField::from_values(&self.grid, buf, Representation::Physical).expect("sizes agree");
        let mut out = total_symbol(&f, &self.symbol, &self.opts).0.into_values();
        self.grid.forward_in_place(&mut out);
        let minus_i = Complex::new(T::zero(), -T::one());
        for z in out.iter_mut() {
            *z *= minus_i;
        }
        Ok(out)
    }

    /// One step on Fourier coefficients.
    pub fn step_spectral_values(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>, String> {
        let h = self.dt;
        let len = v.len();
        let zip = |a: &[Complex<T>], b: &[Complex<T>], op: &dyn Fn(usize, Complex<T>, Complex<T>) -> Complex<T>| {
            (0..len).map(|i| op(i, a[i], b[i])).collect::<Vec<_>>()
        };
        let (e, e2) = (&self.e, &self.e2);
        match self.integrator {
            Integrator::ExpEuler => {
                let nv = self.nonlinear(v)?;
                let w = &self.weights[0];
                Ok(zip(v, &nv, &|i, x, n| e[i] * x + w[i] * n))
            }
            Integrator::EtdRk4 => {
                let [q, f1, f2, f3] = [&self.weights[0], &self.weights[1], &self.weights[2], &self.weights[3]];
                let two = c::<T>(2.0);
                let nv = self.nonlinear(v)?;
                let a = zip(v, &nv, &|i, x, n| e2[i] * x + q[i] * n);
                let na = self.nonlinear(&a)?;
                let b = zip(v, &na, &|i, x, n| e2[i] * x + q[i] * n);
                let nb = self.nonlinear(&b)?;
                let cc: Vec<_> = (0..len).map(|i| e2[i] * a[i] + q[i] * (nb[i] * two - nv[i])).collect();
                let nc = self.nonlinear(&cc)?;
                Ok((0..len)
                    .map(|i| e[i] * v[i] + nv[i] * f1[i] + (na[i] + nb[i]) * f2[i] * two + nc[i] * f3[i])
                    .collect())
            }
            Integrator::Rk4 => {
                let half = c::<T>(0.5);
                let two = c::<T>(2.0);
                let k1: Vec<_> = self.nonlinear(v)?.into_iter().map(|z| z * h).collect();
                let a = zip(v, &k1, &|i, x, k| e2[i] * (x + k * half));
                let k2: Vec<_> = self.nonlinear(&a)?.into_iter().map(|z| z * h).collect();
                let b = zip(v, &k2, &|i, x, k| e2[i] * x + k * half);
                let k3: Vec<_> = self.nonlinear(&b)?.into_iter().map(|z| z * h).collect();
                let d = zip(v, &k3, &|i, x, k| e[i] * x + e2[i] * k);
                let k4: Vec<_> = self.nonlinear(&d)?.into_iter().map(|z| z * h).collect();
                Ok((0..len)
                    .map(|i| e[i] * v[i] + (e[i] * k1[i] + e2[i] * (k2[i] + k3[i]) * two + k4[i]) / c::<T>(6.0))
                    .collect())
            }
        }
    }

    /// One step of a spectral field.
    pub fn step_spectral(&self, v: &ComplexField<T>) -> Result<ComplexField<T>, String> {
        let out = self.step_spectral_values(v.to_spectral().values())?;
        if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err("non-finite coefficients".into());
        }
        Ok(ComplexField::from_values(&self.grid, out, Representation::Spectral).expect("sizes agree"))
    }
}

/// One step of the scalar equation; the result has the representation of `f`.
pub fn step_scalar<T: Real>(
    f: &ComplexField<T>,
    dt: T,
    s: T,
    integrator: Integrator,
    dealias: Dealias,
) -> Result<ComplexField<T>, SolverError> {
    let stepper = ScalarStepper::new(f.grid(), s, dt, integrator, dealias)?;
    stepper
        .step_spectral(f)
        .map(|g| g.into_representation(f.representation()))
        .map_err(|detail| SolverError::Instability {
            step: 1,
            t: dt.to_f64_lossy(),
            detail,
        })
}

/// `exp(-i t (-Delta)^s) f`.
pub fn free_evolution<T: Real>(f: &ComplexField<T>, s: T, t: T) -> Result<ComplexField<T>, SolverError> {
    check_order(s)?;
    let sym = f.grid().fractional_symbol(s);
    let mut g = f.to_spectral();
    for (v, &m) in g.values_mut().iter_mut().zip(&sym) {
        *v *= Complex::from_polar(T::one(), -m * t);
    }
    Ok(g.into_representation(f.representation()))
}
