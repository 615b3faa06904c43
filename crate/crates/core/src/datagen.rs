//! Random band-limited initial data.
//!
//! Coefficients are complex Gaussians with amplitude `exp(-|xi|^2 / xi_c^2)`,
//! restricted to a box of modes, then rescaled to a target size.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::littlewood_paley::{besov_norm, CutoffFamily};
use crate::scalar::Real;
use crate::spectral::{ComplexField, Grid, Representation};

/// How a random field is normalized after drawing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale<T> {
    L2(T),
    /// Largest pointwise modulus.
    Sup(T),
    Besov {
        sigma: T,
        value: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecipe<T> {
    /// Gaussian envelope width.
    pub xi_c: T,
    /// Largest `|m_i|` allowed; `None` means the two-thirds band.
    pub band: Option<i32>,
    pub scale: Scale<T>,
}

fn draw<T: Real>(grid: &Grid<T>, xi_c: T, band: i32, seed: u64) -> ComplexField<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ComplexField::zeros(grid, Representation::Spectral);
    let values = f.values_mut();
    for (idx, v) in values.iter_mut().enumerate() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let m = grid.mode(idx);
        if m.iter().any(|mi| mi.abs() > band) {
            continue;
        }
        let w = (-grid.xi_norm_sq(idx) / (xi_c * xi_c)).exp();
        *v = Complex::new(T::lit(re), T::lit(im)) * w;
    }
    f.into_physical()
}

/// Draws a field following `recipe`. Deterministic in `seed`.
pub fn random_field_with<T: Real>(grid: &Grid<T>, recipe: &FieldRecipe<T>, seed: u64) -> ComplexField<T> {
    let band = recipe.band.unwrap_or((grid.n() / 3) as i32);
    let f = draw(grid, recipe.xi_c, band, seed);
    let size = match recipe.scale {
        Scale::L2(_) => f.norm_l2(),
        Scale::Sup(_) => f.max_abs(),
        Scale::Besov { sigma, .. } => besov_norm(&f, sigma, &CutoffFamily::new(grid)).unwrap_or(T::zero()),
    };
    let target = match recipe.scale {
        Scale::L2(v) | Scale::Sup(v) => v,
        Scale::Besov { value, .. } => value,
    };
    if size == T::zero() {
        return f;
    }
    f.scale(Complex::new(target / size, T::zero()))
}

/// Field with envelope `xi_c` in the two-thirds band, rescaled to L2 norm `l2`.
pub fn random_field<T: Real>(grid: &Grid<T>, xi_c: f64, l2: f64, seed: u64) -> ComplexField<T> {
    random_field_with(
        grid,
        &FieldRecipe {
            xi_c: T::lit(xi_c),
            band: None,
            scale: Scale::L2(T::lit(l2)),
        },
        seed,
    )
}

/// Real-valued field (real part of a random draw), rescaled to L2 norm `l2`.
pub fn random_real_field<T: Real>(grid: &Grid<T>, xi_c: f64, l2: f64, seed: u64) -> Vec<T> {
    let f = random_field::<T>(grid, xi_c, 1.0, seed);
    let re: Vec<T> = f.real_parts();
    let norm = (re.iter().fold(T::zero(), |a, &v| a + v * v) / T::from_usize_lossy(re.len())).sqrt();
    let k = T::lit(l2) / norm;
    re.into_iter().map(|v| v * k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_scaled() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let a = random_field(&g, 2.0, 0.3, 5);
        let b = random_field(&g, 2.0, 0.3, 5);
        assert_eq!(a, b);
        assert!((a.norm_l2() - 0.3).abs() < 1e-14);
        let c = random_field(&g, 2.0, 0.3, 6);
        assert_ne!(a, c);
    }

    #[test]
    fn respects_band() {
        let g = Grid::<f64>::new(2, 32).unwrap();
        let f = random_field_with(
            &g,
            &FieldRecipe {
                xi_c: 4.0,
                band: Some(3),
                scale: Scale::Sup(0.3),
            },
            1,
        );
        assert!((f.max_abs() - 0.3).abs() < 1e-14);
        let fh = f.to_spectral();
        for (idx, v) in fh.values().iter().enumerate() {
            if g.mode(idx).iter().any(|m| m.abs() > 3) {
                assert!(v.norm() < 1e-15);
            }
        }
    }
}
