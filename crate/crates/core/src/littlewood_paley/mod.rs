//! Dyadic frequency decomposition and the norms built from it.
//!
//! `phi0` is a smooth even bump equal to 1 on `[-1, 1]` and vanishing
//! outside `(-2, 2)`. With `phi(r) = phi0(r) - phi0(2r)` the blocks
//! `phi_k(r) = phi(r / 2^k)` telescope, so
//! `phi0(r) + sum_{k=1}^{K} phi_k(r) = phi0(r / 2^K)`, which is 1 for
//! `|r| <= 2^K`.

mod cone;
mod modulation;

pub use cone::{cone_project, ConePartition};
pub use modulation::{modulation_project, xk_norm, Trajectory, XkNorm};

use thiserror::Error;

use crate::scalar::{c, Real};
use crate::spectral::{ComplexField, Grid, SpectralError};
use crate::stereographic::SphereField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("block index {k} outside 0..={k_max}")]
    BlockOutOfRange { k: usize, k_max: usize },
    #[error("Besov regularity must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("direction {0:?} is not in the cone family")]
    UnknownDirection([f64; 3]),
    #[error("cone family covers lattice directions only up to cosine {min_cos:.4} (< 0.55)")]
    Covering { min_cos: f64 },
    #[error("modulation block {j} is not resolved; the window needs {required_samples} samples")]
    Resolution { j: usize, required_samples: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `psi(t)`: 1 for `t <= 0`, 0 for `t >= 1`, smooth in between.
pub fn smoothstep<T: Real>(t: T) -> T {
    if t <= T::zero() {
        return T::one();
    }
    if t >= T::one() {
        return T::zero();
    }
    let g = |x: T| (-T::one() / x).exp();
    let a = g(T::one() - t);
    let b = g(t);
    a / (a + b)
}

/// The base bump: `phi0(r) = psi(|r| - 1)`.
pub fn phi0<T: Real>(r: T) -> T {
    smoothstep(r.abs() - T::one())
}

/// How the annular bump is built from `phi0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhiConvention {
    /// `phi(r) = phi0(r) - phi0(2r)`, which makes the blocks telescope.
    #[default]
    Telescoping,
    /// `phi(r) = phi0(r) - phi0(r/2)`; kept only as a negative control,
    /// it does not sum to one.
    Literal,
}

/// The dyadic cutoffs `phi_k`, `0 <= k <= k_max`, for one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    k_max: usize,
    convention: PhiConvention,
}

impl CutoffFamily {
    /// Family sized so the blocks cover every frequency of `grid`.
    pub fn new<T: Real>(grid: &Grid<T>) -> Self {
        Self::with_convention(grid, PhiConvention::Telescoping)
    }

    pub fn with_convention<T: Real>(grid: &Grid<T>, convention: PhiConvention) -> Self {
        let xi_max = grid.xi_max().to_f64_lossy();
        let k_max = xi_max.log2().ceil().max(1.0) as usize;
        Self { k_max, convention }
    }

    pub fn with_k_max(k_max: usize, convention: PhiConvention) -> Self {
        Self { k_max, convention }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn convention(&self) -> PhiConvention {
        self.convention
    }

    /// The annular bump `phi`.
    pub fn phi<T: Real>(&self, r: T) -> T {
        match self.convention {
            PhiConvention::Telescoping => phi0(r) - phi0(r + r),
            PhiConvention::Literal => phi0(r) - phi0(r * c(0.5)),
        }
    }

    /// `phi_k(r)`; block 0 is `phi0`. Defined for every `k`, range checks
    /// happen in the projections.
    pub fn phi_k<T: Real>(&self, k: usize, r: T) -> T {
        if k == 0 {
            phi0(r)
        } else {
            self.phi(r / T::from_usize_lossy(1usize << k))
        }
    }

    fn check(&self, k: usize) -> Result<(), LpError> {
        if k > self.k_max {
            Err(LpError::BlockOutOfRange { k, k_max: self.k_max })
        } else {
            Ok(())
        }
    }
}

/// `Delta_k f`: spectral multiplication by `phi_k(|xi|)`.
pub fn delta_k<T: Real>(f: &ComplexField<T>, k: usize, family: &CutoffFamily) -> Result<ComplexField<T>, LpError> {
    family.check(k)?;
    let repr = f.representation();
    let mut g = f.to_spectral();
    let grid = g.grid().clone();
    for (idx, v) in g.values_mut().iter_mut().enumerate() {
        *v *= family.phi_k(k, grid.xi_norm_sq(idx).sqrt());
    }
    Ok(g.into_representation(repr))
}

/// Block norms `k -> ||Delta_k f||_{L2}` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicProfile<T> {
    pub block_norms: Vec<T>,
}

impl<T: Real> DyadicProfile<T> {
    pub fn of(f: &ComplexField<T>, family: &CutoffFamily) -> Self {
        let fh = f.to_spectral();
        let grid = fh.grid();
        let mut sums = vec![T::zero(); family.k_max + 1];
        for (idx, v) in fh.values().iter().enumerate() {
            let r = grid.xi_norm_sq(idx).sqrt();
            let p = v.norm_sqr();
            if p == T::zero() {
                continue;
            }
            for (k, sum) in sums.iter_mut().enumerate() {
                let w = family.phi_k(k, r);
                if w != T::zero() {
                    *sum += w * w * p;
                }
            }
        }
        Self {
            block_norms: sums.into_iter().map(|s| s.sqrt()).collect(),
        }
    }

    /// `sum_k 2^{k sigma} b_k`.
    pub fn besov(&self, sigma: T) -> T {
        let two = T::one() + T::one();
        self.block_norms.iter().enumerate().fold(T::zero(), |acc, (k, &b)| {
            acc + two.powf(sigma * T::from_usize_lossy(k)) * b
        })
    }

    pub fn sum_of_squares(&self) -> T {
        self.block_norms.iter().fold(T::zero(), |a, &b| a + b * b)
    }
}

fn check_sigma<T: Real>(sigma: T) -> Result<(), LpError> {
    if sigma < T::zero() {
        Err(LpError::NegativeSigma(sigma.to_f64_lossy()))
    } else {
        Ok(())
    }
}

/// Inhomogeneous Besov norm `B^sigma_{2,1}`.
pub fn besov_norm<T: Real>(f: &ComplexField<T>, sigma: T, family: &CutoffFamily) -> Result<T, LpError> {
    check_sigma(sigma)?;
    Ok(DyadicProfile::of(f, family).besov(sigma))
}

/// `sum_l ||u_l - v_l||_{B^sigma}` over the three components.
pub fn besov_distance_q<T: Real>(
    u: &SphereField<T>,
    v: &SphereField<T>,
    sigma: T,
    family: &CutoffFamily,
) -> Result<T, LpError> {
    check_sigma(sigma)?;
    let grid = u.grid();
    let mut total = T::zero();
    for l in 0..3 {
        let diff: Vec<T> = u.components()[l]
            .iter()
            .zip(&v.components()[l])
            .map(|(a, b)| *a - *b)
            .collect();
        let f = ComplexField::from_real(grid, &diff)?;
        total += besov_norm(&f, sigma, family)?;
    }
    Ok(total)
}

/// `||u||_{B^sigma_Q}`: the distance from `u` to the constant map `q`.
pub fn besov_distance_to_point<T: Real>(
    u: &SphereField<T>,
    q: [T; 3],
    sigma: T,
    family: &CutoffFamily,
) -> Result<T, LpError> {
    let v = SphereField::constant(u.grid(), q);
    besov_distance_q(u, &v, sigma, family)
}
