//! Stereographic chart `L(u) = (u1 + i u2) / (1 + u3)` from the sphere minus
//! the south pole to the plane, its inverse, and the moving frame.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::nonlinearity::scalar_rhs_with;
use crate::scalar::{c, Real};
use crate::spectral::{
    fractional_laplacian_real, relative_l2, ComplexField, Dealias, Grid, Representation, SpectralError,
};

/// Default tolerance on `| |u|^2 - 1 |` for a valid sphere field.
pub const SPHERE_TOL: f64 = 1e-10;
/// Default distance from the south pole below which projection is refused.
pub const POLE_GUARD: f64 = 1e-6;
/// Pass threshold of [`verify_frame_identities`].
pub const FRAME_IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("sample {index} has |u|^2 - 1 = {deviation:e}")]
    OffSphere { index: usize, deviation: f64 },
    #[error("sample {index} has u3 = {u3}, too close to the south pole")]
    Pole { index: usize, u3: f64 },
    #[error("|f| = {value} at sample {index} exceeds {limit}")]
    TooLarge { index: usize, value: f64, limit: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Nonlinearity(#[from] crate::nonlinearity::NonlinError),
}

/// Three real components per sample.
pub type VectorField<T> = [Vec<T>; 3];

/// A map from the grid into the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereField<T: Real> {
    grid: Grid<T>,
    comps: VectorField<T>,
}

impl<T: Real> SphereField<T> {
    /// Validates sizes and `| |u|^2 - 1 | <= SPHERE_TOL`.
    pub fn new(grid: &Grid<T>, comps: VectorField<T>) -> Result<Self, GeometryError> {
        Self::with_tolerance(grid, comps, c(SPHERE_TOL))
    }

    pub fn with_tolerance(grid: &Grid<T>, comps: VectorField<T>, tol: T) -> Result<Self, GeometryError> {
        let u = Self::from_components_unchecked(grid, comps)?;
        if let Some((index, dev)) = u.worst_drift() {
            if dev > tol {
                return Err(GeometryError::OffSphere {
                    index,
                    deviation: dev.to_f64_lossy(),
                });
            }
        }
        Ok(u)
    }

    /// Checks sizes only; used for states that drift off the sphere during
    /// time stepping.
    pub fn from_components_unchecked(grid: &Grid<T>, comps: VectorField<T>) -> Result<Self, GeometryError> {
        for comp in &comps {
            if comp.len() != grid.len() {
                return Err(SpectralError::SizeMismatch {
                    expected: grid.len(),
                    got: comp.len(),
                }
                .into());
            }
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    /// The constant map `q`, normalized.
    pub fn constant(grid: &Grid<T>, q: [T; 3]) -> Self {
        let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let comps = q.map(|v| vec![v / norm; grid.len()]);
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    /// The north pole `Q = (0, 0, 1)` everywhere.
    pub fn north_pole(grid: &Grid<T>) -> Self {
        Self::constant(grid, [T::zero(), T::zero(), T::one()])
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn components(&self) -> &VectorField<T> {
        &self.comps
    }

    pub fn into_components(self) -> VectorField<T> {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [T; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    fn worst_drift(&self) -> Option<(usize, T)> {
        (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (i, (dot(&v, &v) - T::one()).abs())
            })
            .fold(None, |best: Option<(usize, T)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    /// `max_x | 1 - |u(x)|^2 |`.
    pub fn sphere_drift(&self) -> T {
        self.worst_drift().map_or(T::zero(), |(_, d)| d)
    }

    /// Pointwise `u / |u|`.
    pub fn normalized(&self) -> Self {
        let mut comps = self.comps.clone();
        for i in 0..self.grid.len() {
            let v = self.at(i);
            let r = dot(&v, &v).sqrt();
            for (l, comp) in comps.iter_mut().enumerate() {
                comp[i] = v[l] / r;
            }
        }
        Self {
            grid: self.grid.clone(),
            comps,
        }
    }

    /// Mean-square distance `(sum_l ||u_l - v_l||^2)^{1/2}`.
    pub fn distance_l2(&self, other: &Self) -> T {
        let mut sum = T::zero();
        for l in 0..3 {
            for (a, b) in self.comps[l].iter().zip(&other.comps[l]) {
                sum += (*a - *b) * (*a - *b);
            }
        }
        (sum / T::from_usize_lossy(self.grid.len())).sqrt()
    }

    /// `(sum_l ||u_l||^2)^{1/2}`, equal to 1 on the sphere.
    pub fn norm_l2(&self) -> T {
        let mut sum = T::zero();
        for comp in &self.comps {
            for v in comp {
                sum += *v * *v;
            }
        }
        (sum / T::from_usize_lossy(self.grid.len())).sqrt()
    }

    /// `E_s = sum_l sum_xi |xi|^{2s} |u_l_hat(xi)|^2`.
    pub fn energy(&self, s: T) -> Result<T, GeometryError> {
        crate::spectral::check_order(s)?;
        let symbol = self.grid.fractional_symbol(s);
        let mut e = T::zero();
        for comp in &self.comps {
            let f = ComplexField::from_real(&self.grid, comp)?.into_spectral();
            for (v, &m) in f.values().iter().zip(&symbol) {
                e += m * v.norm_sqr();
            }
        }
        Ok(e)
    }

    /// Each component as a complex field.
    pub fn component_field(&self, l: usize) -> ComplexField<T> {
        ComplexField::from_real(&self.grid, &self.comps[l]).expect("sizes agree")
    }
}

pub(crate) fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `L^{-1}(z) = (2 z1, 2 z2, 1 - |z|^2) / (1 + |z|^2)`.
pub fn inverse_point<T: Real>(z: Complex<T>) -> [T; 3] {
    let r2 = z.norm_sqr();
    let d = T::one() + r2;
    [(z.re + z.re) / d, (z.im + z.im) / d, (T::one() - r2) / d]
}

/// `(d/dz1 L^{-1}(z), d/dz2 L^{-1}(z))` in closed form.
pub fn inverse_partials<T: Real>(z: Complex<T>) -> ([T; 3], [T; 3]) {
    let (z1, z2) = (z.re, z.im);
    let r2 = z.norm_sqr();
    let one = T::one();
    let two = one + one;
    let d = one + r2;
    let k = two / (d * d);
    let d1 = [k * (d - two * z1 * z1), -k * two * z1 * z2, -k * two * z1];
    let d2 = [-k * two * z1 * z2, k * (d - two * z2 * z2), -k * two * z2];
    (d1, d2)
}

/// Pointwise `f = (u1 + i u2) / (1 + u3)` with the default pole guard.
pub fn project<T: Real>(u: &SphereField<T>) -> Result<ComplexField<T>, GeometryError> {
    project_with_guard(u, c(POLE_GUARD))
}

/// Projection refusing any sample with `u3 <= -1 + delta`; the error names
/// the sample closest to the pole.
pub fn project_with_guard<T: Real>(u: &SphereField<T>, delta: T) -> Result<ComplexField<T>, GeometryError> {
    let [u1, u2, u3] = &u.comps;
    let (worst, min_u3) = u3
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if min_u3 <= -T::one() + delta {
        return Err(GeometryError::Pole {
            index: worst,
            u3: min_u3.to_f64_lossy(),
        });
    }
    let values = (0..u.grid.len())
        .map(|i| Complex::new(u1[i], u2[i]) / (T::one() + u3[i]))
        .collect();
    Ok(ComplexField::from_values(&u.grid, values, Representation::Physical)?)
}

/// Pointwise `L^{-1}(f)`.
pub fn lift<T: Real>(f: &ComplexField<T>) -> SphereField<T> {
    let f = f.to_physical();
    let len = f.grid().len();
    let mut comps = [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]];
    for (i, &z) in f.values().iter().enumerate() {
        let p = inverse_point(z);
        for l in 0..3 {
            comps[l][i] = p[l];
        }
    }
    SphereField {
        grid: f.grid().clone(),
        comps,
    }
}

/// The orthonormal tangent frame `e_i = d_i L^{-1}(f) / |d_i L^{-1}(f)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair<T> {
    pub e1: VectorField<T>,
    pub e2: VectorField<T>,
}

impl<T: Real> FramePair<T> {
    pub fn at(&self, idx: usize) -> ([T; 3], [T; 3]) {
        (
            [self.e1[0][idx], self.e1[1][idx], self.e1[2][idx]],
            [self.e2[0][idx], self.e2[1][idx], self.e2[2][idx]],
        )
    }
}

/// Frame vectors at one point.
pub fn frame_at<T: Real>(z: Complex<T>) -> ([T; 3], [T; 3]) {
    let (d1, d2) = inverse_partials(z);
    let n1 = dot(&d1, &d1).sqrt();
    let n2 = dot(&d2, &d2).sqrt();
    (d1.map(|v| v / n1), d2.map(|v| v / n2))
}

pub fn frame<T: Real>(f: &ComplexField<T>) -> FramePair<T> {
    let f = f.to_physical();
    let len = f.grid().len();
    let zeros = || [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]];
    let (mut e1, mut e2) = (zeros(), zeros());
    for (i, &z) in f.values().iter().enumerate() {
        let (a, b) = frame_at(z);
        for l in 0..3 {
            e1[l][i] = a[l];
            e2[l][i] = b[l];
        }
    }
    FramePair { e1, e2 }
}

/// Largest residual of each of the six chart identities.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FrameIdentityReport {
    pub samples: usize,
    /// Residuals of: the two partial-derivative formulas, the norm formula,
    /// orthogonality, and the two cross-product relations.
    pub max_residual: [f64; 6],
    /// Point where the overall largest residual occurred.
    pub worst_z: [f64; 2],
    pub pass: bool,
}

impl FrameIdentityReport {
    pub fn overall(&self) -> f64 {
        self.max_residual.iter().fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// Derivatives of `L^{-1}` by complex-step differentiation of its analytic
/// extension: exact to roundoff, no subtractive cancellation.
fn complex_step_partials(z1: f64, z2: f64) -> ([f64; 3], [f64; 3]) {
    const H: f64 = 1e-30;
    let eval = |a: Complex<f64>, b: Complex<f64>| {
        let r2 = a * a + b * b;
        let d = Complex::new(1.0, 0.0) + r2;
        [a * 2.0 / d, b * 2.0 / d, (Complex::new(1.0, 0.0) - r2) / d]
    };
    let p1 = eval(Complex::new(z1, H), Complex::new(z2, 0.0));
    let p2 = eval(Complex::new(z1, 0.0), Complex::new(z2, H));
    (p1.map(|v| v.im / H), p2.map(|v| v.im / H))
}

fn max_abs_diff(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).fold(0.0, |m: f64, i| m.max((a[i] - b[i]).abs()))
}

/// Residuals of the six chart identities at one point.
pub fn frame_identity_residuals(z: Complex<f64>) -> [f64; 6] {
    let (d1, d2) = inverse_partials(z);
    let (c1, c2) = complex_step_partials(z.re, z.im);
    let p = inverse_point(z);
    let target_norm = 2.0 / (1.0 + z.norm_sqr());
    let norm_res = (dot(&d1, &d1).sqrt() - target_norm)
        .abs()
        .max((dot(&d2, &d2).sqrt() - target_norm).abs());
    let minus_d1 = d1.map(|v| -v);
    [
        max_abs_diff(&d1, &c1),
        max_abs_diff(&d2, &c2),
        norm_res,
        dot(&d1, &d2).abs(),
        max_abs_diff(&cross(&p, &d1), &d2),
        max_abs_diff(&cross(&p, &d2), &minus_d1),
    ]
}

/// Checks the chart identities at `samples` points drawn uniformly from the
/// disc `|z| <= radius`.
pub fn verify_frame_identities(samples: usize, seed: u64, radius: f64) -> FrameIdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = [0.0; 6];
    let mut worst = (0.0, [0.0, 0.0]);
    for _ in 0..samples {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let z = Complex::from_polar(r, theta);
        let res = frame_identity_residuals(z);
        for (m, v) in max_residual.iter_mut().zip(res) {
            *m = f64::max(*m, v);
        }
        let top = res.iter().fold(0.0, |a: f64, &b| a.max(b));
        if top > worst.0 {
            worst = (top, [z.re, z.im]);
        }
    }
    FrameIdentityReport {
        samples,
        max_residual,
        worst_z: worst.1,
        pass: max_residual.iter().all(|&r| r <= FRAME_IDENTITY_TOL),
    }
}

/// `-u ^ (-Delta)^s u`, with `(-Delta)^s` applied to each component.
pub fn geometric_rhs<T: Real>(u: &SphereField<T>, s: T) -> Result<VectorField<T>, GeometryError> {
    crate::spectral::check_order(s)?;
    Ok(geometric_rhs_symbol(u, &u.grid.fractional_symbol(s), Dealias::Off))
}

/// [`geometric_rhs`] with a precomputed symbol and an optional dealiasing
/// of the cross product.
pub(crate) fn geometric_rhs_symbol<T: Real>(u: &SphereField<T>, symbol: &[T], rule: Dealias) -> VectorField<T> {
    let grid = &u.grid;
    let lap: Vec<Vec<T>> = u
        .comps
        .iter()
        .map(|comp| fractional_laplacian_real(grid, comp, symbol))
        .collect();
    let len = grid.len();
    let mut out = [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]];
    for i in 0..len {
        let a = u.at(i);
        let b = [lap[0][i], lap[1][i], lap[2][i]];
        let w = cross(&a, &b);
        for l in 0..3 {
            out[l][i] = -w[l];
        }
    }
    if rule != Dealias::Off {
        for comp in out.iter_mut() {
            let f = ComplexField::from_real(grid, comp).expect("sizes agree");
            let g = crate::spectral::dealias(&f, rule).into_physical();
            *comp = g.real_parts();
        }
    }
    out
}

/// `((1 + |f|^2) / 2) (<e1, v> + i <e2, v>)`: a tangent vector field along
/// `L^{-1}(f)` expressed as a time derivative of `f`.
pub fn frame_coordinates<T: Real>(f: &ComplexField<T>, v: &VectorField<T>) -> ComplexField<T> {
    let f = f.to_physical();
    let half = c::<T>(0.5);
    let values = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (e1, e2) = frame_at(z);
            let w = [v[0][i], v[1][i], v[2][i]];
            Complex::new(dot(&e1, &w), dot(&e2, &w)) * ((T::one() + z.norm_sqr()) * half)
        })
        .collect();
    ComplexField::from_values(f.grid(), values, Representation::Physical).expect("sizes agree")
}

/// Relative L2 gap between the scalar equation and the geometric equation
/// read through the frame, with no dealiasing.
pub fn reduction_residual<T: Real>(f: &ComplexField<T>, s: T) -> Result<T, GeometryError> {
    reduction_residual_with(f, s, Dealias::Off)
}

/// [`reduction_residual`] with `rule` applied to the products of both routes
/// and to the frame-coordinate output, so both sides live on the same band.
pub fn reduction_residual_with<T: Real>(f: &ComplexField<T>, s: T, rule: Dealias) -> Result<T, GeometryError> {
    crate::spectral::check_order(s)?;
    let f = f.to_physical();
    let limit = c::<T>(10.0);
    for (index, z) in f.values().iter().enumerate() {
        if !(z.norm() <= limit) {
            return Err(GeometryError::TooLarge {
                index,
                value: z.norm().to_f64_lossy(),
                limit: 10.0,
            });
        }
    }
    let a = scalar_rhs_with(&f, s, rule)?;
    let u = lift(&f);
    let v = geometric_rhs_symbol(&u, &f.grid().fractional_symbol(s), rule);
    let b = crate::spectral::dealias(&frame_coordinates(&f, &v), rule).into_physical();
    Ok(relative_l2(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_field;

    #[test]
    fn chart_examples() {
        let g = Grid::<f64>::new(1, 8).unwrap();
        let cases = [
            ([0.0, 0.0, 1.0], Complex::new(0.0, 0.0)),
            ([1.0, 0.0, 0.0], Complex::new(1.0, 0.0)),
            ([0.0, 1.0, 0.0], Complex::new(0.0, 1.0)),
        ];
        for (q, z) in cases {
            let u = SphereField::constant(&g, q);
            let f = project(&u).unwrap();
            assert!(f.values().iter().all(|v| (*v - z).norm() < 1e-15));
            let back = lift(&f);
            assert!(back.distance_l2(&u) < 1e-15);
        }
    }

    #[test]
    fn pole_is_rejected_with_the_worst_sample() {
        let g = Grid::<f64>::new(1, 8).unwrap();
        let mut comps = SphereField::north_pole(&g).into_components();
        comps[2][5] = -1.0;
        comps[0][5] = 0.0;
        let u = SphereField::new(&g, comps).unwrap();
        assert_eq!(project(&u), Err(GeometryError::Pole { index: 5, u3: -1.0 }));
    }

    #[test]
    fn off_sphere_is_rejected() {
        let g = Grid::<f64>::new(1, 8).unwrap();
        let comps = [vec![0.0; 8], vec![0.0; 8], vec![1.01; 8]];
        assert!(matches!(
            SphereField::new(&g, comps),
            Err(GeometryError::OffSphere { .. })
        ));
    }

    #[test]
    fn round_trips() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        for seed in 0..10 {
            let f = random_field(&g, 4.0, 2.0, seed);
            let u = lift(&f);
            assert!(u.sphere_drift() < 1e-15);
            let back = project(&u).unwrap();
            assert!(relative_l2(&back, &f) < 1e-12);
            let again = lift(&back);
            assert!(again.distance_l2(&u) < 1e-12);
        }
    }

    #[test]
    fn frame_examples() {
        let (e1, e2) = frame_at(Complex::new(0.0f64, 0.0));
        assert_eq!(e1, [1.0, 0.0, 0.0]);
        assert_eq!(e2, [0.0, 1.0, 0.0]);
        let (d1, _) = inverse_partials(Complex::new(1.0f64, 0.0));
        assert!((dot(&d1, &d1).sqrt() - 1.0).abs() < 1e-15);
        let r = frame_identity_residuals(Complex::new(0.0, 0.0));
        assert!(r.iter().all(|&v| v == 0.0));
        let r = frame_identity_residuals(Complex::new(3.0, 4.0));
        assert!(r.iter().all(|&v| v <= 1e-12), "{r:?}");
    }

    #[test]
    fn identity_suite_passes() {
        let rep = verify_frame_identities(10_000, 7, 10.0);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn rhs_is_tangent_and_kills_constants() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let q = SphereField::constant(&g, [0.3, -0.4, 0.5]);
        let v = geometric_rhs(&q, 0.75).unwrap();
        assert!(v.iter().flatten().all(|x| x.abs() < 1e-15));
        let u = lift(&random_field(&g, 3.0, 0.8, 4));
        let v = geometric_rhs(&u, 0.75).unwrap();
        for (i, ((a, b), c)) in v[0].iter().zip(&v[1]).zip(&v[2]).enumerate() {
            let w = [*a, *b, *c];
            assert!(dot(&w, &u.at(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn reduction_is_an_identity_on_examples() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let zero = ComplexField::zeros(&g, Representation::Physical);
        assert_eq!(reduction_residual(&zero, 0.75).unwrap(), 0.0);
        let cst = ComplexField::constant(&g, Complex::new(0.2, -0.1));
        let a = crate::nonlinearity::scalar_rhs(&cst, 0.75).unwrap();
        assert!(a.max_abs() < 1e-14);
        let f = random_field(&g, 2.0, 0.2, 8);
        assert!(reduction_residual(&f, 0.75).unwrap() < 1e-12);
    }

    #[test]
    fn too_large_field_is_rejected() {
        let g = Grid::<f64>::new(1, 8).unwrap();
        let f = ComplexField::constant(&g, Complex::new(11.0, 0.0));
        assert!(matches!(
            reduction_residual(&f, 0.5),
            Err(GeometryError::TooLarge { .. })
        ));
    }
}
