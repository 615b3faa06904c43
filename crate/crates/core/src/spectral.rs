//! Periodic grid, discrete Fourier transforms and Fourier multipliers.
//!
//! The torus `[0, P)^n` is sampled with `N` points per axis. Spectral
//! coefficients are normalized so that the pure mode `e^{i xi.x}` has a unit
//! coefficient, and the L2 norm is the mean-square norm over the torus, so
//! `||e^{i xi.x}||_{L2} = 1` and Parseval reads `||f||_{L2} = l2(f_hat)`.
//!
//! Flat indices are row-major with the last axis contiguous.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("field is in {found:?} representation, expected {expected:?}")]
    Representation {
        expected: Representation,
        found: Representation,
    },
    #[error("symbol is not finite at occupied mode {mode:?}")]
    NonFiniteSymbol { mode: [i32; 3] },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("grids differ")]
    GridMismatch,
}

/// Whether the samples of a field are point values or Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Representation {
    Physical,
    Spectral,
}

/// Which modes survive [`dealias`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Dealias {
    Off,
    /// Keep `|m_i| <= N/3` on every axis.
    #[default]
    TwoThirds,
    /// Keep `|m_i| <= N/4` on every axis.
    Half,
}

impl Dealias {
    #[inline]
    fn keeps(self, m: i32, n: usize) -> bool {
        let m = m.unsigned_abs() as usize;
        match self {
            Dealias::Off => true,
            Dealias::TwoThirds => 3 * m <= n,
            Dealias::Half => 4 * m <= n,
        }
    }
}

struct GridCache<T: Real> {
    modes: Vec<[i32; 3]>,
    xi: Vec<[T; 3]>,
    xi_norm_sq: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// Periodic lattice of `N^n` samples on the torus of side `box_period`.
#[derive(Clone)]
pub struct Grid<T: Real> {
    dim: usize,
    n: usize,
    period: T,
    cache: Arc<GridCache<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

impl<T: Real> Grid<T> {
    /// Grid on the standard torus `[0, 2 pi)^dim`, where frequencies are integers.
    pub fn new(dim: usize, n: usize) -> Result<Self, SpectralError> {
        Self::with_period(dim, n, T::PI() + T::PI())
    }

    pub fn with_period(dim: usize, n: usize, period: T) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "samples per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(period > T::zero()) || !period.is_finite() {
            return Err(SpectralError::InvalidGrid(format!(
                "box period must be positive, got {period}"
            )));
        }
        let len = n.pow(dim as u32);
        let scale = (T::PI() + T::PI()) / period;
        let mut modes = Vec::with_capacity(len);
        let mut xi = Vec::with_capacity(len);
        let mut xi_norm_sq = Vec::with_capacity(len);
        for idx in 0..len {
            let mut m = [0i32; 3];
            let mut rest = idx;
            for axis in (0..dim).rev() {
                let i = rest % n;
                rest /= n;
                m[axis] = if i < n / 2 { i as i32 } else { i as i32 - n as i32 };
            }
            let v = [
                scale * T::from_i32(m[0]).unwrap(),
                scale * T::from_i32(m[1]).unwrap(),
                scale * T::from_i32(m[2]).unwrap(),
            ];
            modes.push(m);
            xi_norm_sq.push(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            xi.push(v);
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft(n, FftDirection::Forward);
        let inverse = planner.plan_fft(n, FftDirection::Inverse);
        Ok(Self {
            dim,
            n,
            period,
            cache: Arc::new(GridCache {
                modes,
                xi,
                xi_norm_sq,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.cache.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing in frequency space, `2 pi / box_period`.
    pub fn wavenumber_unit(&self) -> T {
        (T::PI() + T::PI()) / self.period
    }

    /// Integer mode vector of a flat spectral index (unused axes are zero).
    #[inline]
    pub fn mode(&self, idx: usize) -> [i32; 3] {
        self.cache.modes[idx]
    }

    /// Physical frequency `xi` of a flat spectral index.
    #[inline]
    pub fn xi(&self, idx: usize) -> [T; 3] {
        self.cache.xi[idx]
    }

    #[inline]
    pub fn xi_norm_sq(&self, idx: usize) -> T {
        self.cache.xi_norm_sq[idx]
    }

    pub fn xi_norms_sq(&self) -> &[T] {
        &self.cache.xi_norm_sq
    }

    /// Largest `|xi|` on the lattice.
    pub fn xi_max(&self) -> T {
        self.cache
            .xi_norm_sq
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v))
            .sqrt()
    }

    /// Flat index of an integer mode, if it lies on the lattice.
    pub fn index_of_mode(&self, m: [i32; 3]) -> Option<usize> {
        let half = (self.n / 2) as i32;
        let mut idx = 0usize;
        for (axis, &mi) in m.iter().enumerate() {
            if axis >= self.dim {
                if mi != 0 {
                    return None;
                }
                continue;
            }
            if mi < -half || mi >= half {
                return None;
            }
            let i = if mi < 0 { mi + self.n as i32 } else { mi } as usize;
            idx = idx * self.n + i;
        }
        Some(idx)
    }

    /// Physical coordinates of a flat sample index.
    pub fn coords(&self, idx: usize) -> [T; 3] {
        let h = self.period / T::from_usize_lossy(self.n);
        let mut x = [T::zero(); 3];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            x[axis] = h * T::from_usize_lossy(rest % self.n);
            rest /= self.n;
        }
        x
    }

    /// `|xi|^{2s}` at every lattice point, zero at the zero mode.
    pub fn fractional_symbol(&self, s: T) -> Vec<T> {
        self.cache
            .xi_norm_sq
            .iter()
            .map(|&k2| if k2 == T::zero() { T::zero() } else { k2.powf(s) })
            .collect()
    }

    /// In-place unnormalized n-dimensional transform.
    fn fft_nd(&self, data: &mut [Complex<T>], direction: FftDirection) {
        let n = self.n;
        let fft = match direction {
            FftDirection::Forward => &self.cache.forward,
            FftDirection::Inverse => &self.cache.inverse,
        };
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        // contiguous axis: every run of n samples is one line
        fft.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let len = data.len();
        let mut lines = vec![Complex::new(T::zero(), T::zero()); len];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = len / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let line = (o * stride + inner) * n;
                    for j in 0..n {
                        lines[line + j] = data[base + j * stride];
                    }
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * n * stride + inner;
                    let line = (o * stride + inner) * n;
                    for j in 0..n {
                        data[base + j * stride] = lines[line + j];
                    }
                }
            }
        }
    }

    pub(crate) fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.fft_nd(data, FftDirection::Forward);
        let norm = T::one() / T::from_usize_lossy(data.len());
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex<T>]) {
        self.fft_nd(data, FftDirection::Inverse);
    }

    pub(crate) fn dealias_in_place(&self, coeffs: &mut [Complex<T>], rule: Dealias) {
        if rule == Dealias::Off {
            return;
        }
        let zero = Complex::new(T::zero(), T::zero());
        for (v, m) in coeffs.iter_mut().zip(self.cache.modes.iter()) {
            if !m.iter().all(|&mi| rule.keeps(mi, self.n)) {
                *v = zero;
            }
        }
    }

    /// Physical-space samples of a real symbol applied to real or complex data.
    pub(crate) fn apply_real_symbol(&self, values: &[Complex<T>], symbol: &[T]) -> Vec<Complex<T>> {
        let mut buf = values.to_vec();
        self.forward_in_place(&mut buf);
        for (v, &m) in buf.iter_mut().zip(symbol) {
            *v *= m;
        }
        self.inverse_in_place(&mut buf);
        buf
    }
}

/// Complex samples over a [`Grid`], tagged with their representation.
#[derive(Clone, Debug)]
pub struct ComplexField<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
    repr: Representation,
}

impl<T: Real> PartialEq for ComplexField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.repr == other.repr && self.values == other.values
    }
}

impl<T: Real> ComplexField<T> {
    pub fn zeros(grid: &Grid<T>, repr: Representation) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
            repr,
        }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<Complex<T>>, repr: Representation) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            repr,
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self {
            grid: grid.clone(),
            values,
            repr: Representation::Physical,
        }
    }

    pub fn from_real(grid: &Grid<T>, values: &[T]) -> Result<Self, SpectralError> {
        Self::from_values(
            grid,
            values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
            Representation::Physical,
        )
    }

    /// The plane wave `amp * e^{i m.x}` for an integer mode `m`.
    pub fn plane_wave(grid: &Grid<T>, m: [i32; 3], amp: Complex<T>) -> Self {
        let unit = grid.wavenumber_unit();
        let k = m.map(|mi| unit * T::from_i32(mi).unwrap());
        Self::from_fn(grid, |x| {
            let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            amp * Complex::new(phase.cos(), phase.sin())
        })
    }

    pub fn constant(grid: &Grid<T>, value: Complex<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
            repr: Representation::Physical,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn into_spectral(mut self) -> Self {
        if self.repr == Representation::Physical {
            self.grid.forward_in_place(&mut self.values);
            self.repr = Representation::Spectral;
        }
        self
    }

    pub fn into_physical(mut self) -> Self {
        if self.repr == Representation::Spectral {
            self.grid.inverse_in_place(&mut self.values);
            self.repr = Representation::Physical;
        }
        self
    }

    pub fn to_spectral(&self) -> Self {
        self.clone().into_spectral()
    }

    pub fn to_physical(&self) -> Self {
        self.clone().into_physical()
    }

    pub fn into_representation(self, repr: Representation) -> Self {
        match repr {
            Representation::Physical => self.into_physical(),
            Representation::Spectral => self.into_spectral(),
        }
    }

    /// Mean-square L2 norm; equal to the l2 norm of the coefficients.
    pub fn norm_l2(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr());
        match self.repr {
            Representation::Physical => (sum / T::from_usize_lossy(self.values.len())).sqrt(),
            Representation::Spectral => sum.sqrt(),
        }
    }

    /// `<self, other> = mean(conj(self) * other)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let a = self.to_physical();
        let b = other.to_physical();
        let sum = a
            .values
            .iter()
            .zip(&b.values)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y);
        sum / T::from_usize_lossy(a.values.len())
    }

    /// Largest pointwise modulus in physical space.
    pub fn max_abs(&self) -> T {
        let p = self.to_physical();
        p.values.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    /// Largest imaginary part in physical space.
    pub fn imag_residue(&self) -> T {
        let p = self.to_physical();
        p.values.iter().fold(T::zero(), |acc, v| acc.max(v.im.abs()))
    }

    pub fn conj(&self) -> Self {
        let p = self.to_physical();
        Self {
            grid: p.grid,
            values: p.values.iter().map(|v| v.conj()).collect(),
            repr: Representation::Physical,
        }
    }

    pub fn scale(&self, a: Complex<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
            repr: self.repr,
        }
    }

    /// Pointwise product in physical space.
    pub fn mul_pointwise(&self, other: &Self) -> Self {
        let a = self.to_physical();
        let b = other.to_physical();
        Self {
            grid: a.grid.clone(),
            values: a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect(),
            repr: Representation::Physical,
        }
    }

    /// Pointwise map in physical space.
    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let p = self.to_physical();
        Self {
            grid: p.grid.clone(),
            values: p.values.iter().map(|&v| f(v)).collect(),
            repr: Representation::Physical,
        }
    }

    /// Real parts of the physical samples.
    pub fn real_parts(&self) -> Vec<T> {
        self.to_physical().values.iter().map(|v| v.re).collect()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let other = if other.repr == self.repr {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(other.clone().into_representation(self.repr))
        };
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&x, &y)| op(x, y))
                .collect(),
            repr: self.repr,
        }
    }
}

impl<T: Real> Add for &ComplexField<T> {
    type Output = ComplexField<T>;
    fn add(self, rhs: Self) -> ComplexField<T> {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &ComplexField<T> {
    type Output = ComplexField<T>;
    fn sub(self, rhs: Self) -> ComplexField<T> {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<Complex<T>> for &ComplexField<T> {
    type Output = ComplexField<T>;
    fn mul(self, rhs: Complex<T>) -> ComplexField<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for &ComplexField<T> {
    type Output = ComplexField<T>;
    fn neg(self) -> ComplexField<T> {
        self.scale(Complex::new(-T::one(), T::zero()))
    }
}

/// Real samples over a grid (physical representation only).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField<T: Real> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> RealField<T> {
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Real part of a complex field, rejecting it if the imaginary residue
    /// exceeds `tol` relative to the field magnitude.
    pub fn from_complex(f: &ComplexField<T>, tol: T) -> Result<Self, SpectralError> {
        let p = f.to_physical();
        let scale = p.max_abs().max(T::min_positive_value());
        let residue = p.imag_residue();
        if residue > tol * scale {
            return Err(SpectralError::Parameter(format!(
                "imaginary residue {residue:e} exceeds tolerance for a real field"
            )));
        }
        Ok(Self {
            grid: p.grid.clone(),
            values: p.values.iter().map(|v| v.re).collect(),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn to_complex(&self) -> ComplexField<T> {
        ComplexField::from_real(&self.grid, &self.values).expect("sizes agree")
    }
}

/// Fourier coefficients of a physical field.
pub fn forward_transform<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>, SpectralError> {
    if f.values.len() != f.grid.len() {
        return Err(SpectralError::SizeMismatch {
            expected: f.grid.len(),
            got: f.values.len(),
        });
    }
    if f.repr != Representation::Physical {
        return Err(SpectralError::Representation {
            expected: Representation::Physical,
            found: f.repr,
        });
    }
    Ok(f.to_spectral())
}

/// Physical samples of a spectral field.
pub fn inverse_transform<T: Real>(f: &ComplexField<T>) -> Result<ComplexField<T>, SpectralError> {
    if f.values.len() != f.grid.len() {
        return Err(SpectralError::SizeMismatch {
            expected: f.grid.len(),
            got: f.values.len(),
        });
    }
    if f.repr != Representation::Spectral {
        return Err(SpectralError::Representation {
            expected: Representation::Spectral,
            found: f.repr,
        });
    }
    Ok(f.to_physical())
}

/// Multiplies the spectral coefficients of `f` by `m(xi)`. The output keeps
/// the representation of the input.
///
/// A non-finite symbol value is an error only at occupied modes; modes
/// holding nothing but transform roundoff are set to zero.
pub fn apply_symbol<T: Real>(
    f: &ComplexField<T>,
    m: impl Fn(&[T; 3]) -> Complex<T>,
) -> Result<ComplexField<T>, SpectralError> {
    let repr = f.repr;
    let mut g = f.to_spectral();
    let zero = Complex::new(T::zero(), T::zero());
    let peak = g.values.iter().fold(T::zero(), |a, v| a.max(v.norm()));
    let floor = peak * T::epsilon() * T::from_usize_lossy(g.values.len());
    for (idx, v) in g.values.iter_mut().enumerate() {
        let sym = m(&g.grid.cache.xi[idx]);
        if sym.re.is_finite() && sym.im.is_finite() {
            *v *= sym;
        } else if v.norm() <= floor {
            *v = zero;
        } else {
            return Err(SpectralError::NonFiniteSymbol { mode: g.grid.mode(idx) });
        }
    }
    Ok(g.into_representation(repr))
}

pub(crate) fn check_order<T: Real>(s: T) -> Result<(), SpectralError> {
    if s > T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(SpectralError::Parameter(format!(
            "fractional order s must lie in (0, 1], got {s}"
        )))
    }
}

/// `(-Delta)^s f`, the multiplier `|xi|^{2s}`.
pub fn fractional_laplacian<T: Real>(f: &ComplexField<T>, s: T) -> Result<ComplexField<T>, SpectralError> {
    check_order(s)?;
    let repr = f.repr;
    let mut g = f.to_spectral();
    for (v, &k2) in g.values.iter_mut().zip(g.grid.cache.xi_norm_sq.iter()) {
        *v = if k2 == T::zero() {
            Complex::new(T::zero(), T::zero())
        } else {
            *v * k2.powf(s)
        };
    }
    Ok(g.into_representation(repr))
}

/// `(-Delta)^s` of real samples, returned as real samples.
pub fn fractional_laplacian_real<T: Real>(grid: &Grid<T>, values: &[T], symbol: &[T]) -> Vec<T> {
    let buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    grid.apply_real_symbol(&buf, symbol).into_iter().map(|v| v.re).collect()
}

/// Zeroes every mode outside the band kept by `rule`; representation is preserved.
pub fn dealias<T: Real>(f: &ComplexField<T>, rule: Dealias) -> ComplexField<T> {
    if rule == Dealias::Off {
        return f.clone();
    }
    let repr = f.repr;
    let mut g = f.to_spectral();
    g.grid.dealias_in_place(&mut g.values, rule);
    g.into_representation(repr)
}

/// Pointwise product followed by dealiasing, in physical representation.
pub(crate) fn product<T: Real>(a: &ComplexField<T>, b: &ComplexField<T>, rule: Dealias) -> ComplexField<T> {
    let p = a.mul_pointwise(b);
    if rule == Dealias::Off {
        p
    } else {
        dealias(&p, rule).into_physical()
    }
}

/// Relative L2 distance `||a - b|| / max(||a||, ||b||, floor)`.
pub fn relative_l2<T: Real>(a: &ComplexField<T>, b: &ComplexField<T>) -> T {
    let diff = (a - b).norm_l2();
    let scale = a.norm_l2().max(b.norm_l2()).max(T::epsilon());
    diff / scale
}

/// Spectral interpolation onto another grid of the same dimension and
/// period: shared modes are copied, the rest are zero. Nyquist modes of the
/// source are dropped.
pub fn resample<T: Real>(f: &ComplexField<T>, grid: &Grid<T>) -> Result<ComplexField<T>, SpectralError> {
    let src = f.grid();
    if src.dim() != grid.dim() || src.period() != grid.period() {
        return Err(SpectralError::GridMismatch);
    }
    let fh = f.to_spectral();
    let half = (src.n() / 2) as i32;
    let mut out = ComplexField::zeros(grid, Representation::Spectral);
    for (idx, v) in fh.values().iter().enumerate() {
        let m = src.mode(idx);
        if m.iter().any(|&mi| mi == -half) {
            continue;
        }
        if let Some(j) = grid.index_of_mode(m) {
            out.values[j] = *v;
        }
    }
    Ok(out.into_representation(f.repr))
}
