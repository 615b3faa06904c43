//! Finite direction family with a smooth angular partition of unity.

use num_complex::Complex;

use super::{smoothstep, LpError};
use crate::scalar::{c, Real};
use crate::spectral::{ComplexField, Grid};

const MIN_COVERING_COS: f64 = 0.55;

/// Directions `E` (closed under negation) and angular weights `theta_e`.
///
/// For `n = 3` the family is the 26 normalized vectors of `{-1,0,1}^3 \ {0}`,
/// for `n = 2` the 8 vectors of `{-1,0,1}^2 \ {0}`, for `n = 1` just `+-1`.
/// Directions are kept in lexicographic order; the zero mode belongs
/// entirely to the first one.
#[derive(Debug, Clone)]
pub struct ConePartition<T: Real> {
    dim: usize,
    directions: Vec<[T; 3]>,
    min_cos: T,
}

impl<T: Real> ConePartition<T> {
    /// Builds the family for `grid` and checks the covering bound over every
    /// nonzero lattice direction.
    pub fn new(grid: &Grid<T>) -> Result<Self, LpError> {
        let dim = grid.dim();
        let mut directions = Vec::new();
        let range: Vec<i32> = vec![-1, 0, 1];
        for &a in &range {
            for &b in if dim >= 2 { &range[..] } else { &[0][..] } {
                for &d in if dim >= 3 { &range[..] } else { &[0][..] } {
                    let v = [a, b, d];
                    if v == [0, 0, 0] {
                        continue;
                    }
                    // lexicographic over (axis 0, axis 1, axis 2)
                    let mut e = [T::zero(); 3];
                    let mut norm = T::zero();
                    for (i, &vi) in v.iter().enumerate() {
                        e[i] = T::from_i32(vi).unwrap();
                        norm += e[i] * e[i];
                    }
                    let norm = norm.sqrt();
                    directions.push(e.map(|x| x / norm));
                }
            }
        }
        let mut family = Self {
            dim,
            directions,
            min_cos: T::one(),
        };
        let mut min_cos = T::one();
        for idx in 1..grid.len() {
            let xi = grid.xi(idx);
            let r = grid.xi_norm_sq(idx).sqrt();
            let best = family
                .directions
                .iter()
                .map(|e| dot(&xi, e) / r)
                .fold(-T::one(), |a, b| a.max(b));
            min_cos = min_cos.min(best);
        }
        if min_cos < c(MIN_COVERING_COS) {
            return Err(LpError::Covering {
                min_cos: min_cos.to_f64_lossy(),
            });
        }
        family.min_cos = min_cos;
        Ok(family)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[[T; 3]] {
        &self.directions
    }

    /// Worst-case `max_e <xi/|xi|, e>` found over the grid at construction.
    pub fn covering_cosine(&self) -> T {
        self.min_cos
    }

    /// Unnormalized bump: zero for `cos <= 1/2`, one at `cos = 1`.
    fn bump(cos: T) -> T {
        T::one() - smoothstep(cos + cos - T::one())
    }

    /// Index of `e` in the family.
    pub fn position(&self, e: &[T; 3]) -> Option<usize> {
        let tol = c::<T>(1e-12);
        self.directions
            .iter()
            .position(|d| (0..3).all(|i| (d[i] - e[i]).abs() <= tol))
    }

    /// `theta_e(xi)` for every direction, at nonzero `xi`.
    pub fn weights(&self, xi: &[T; 3]) -> Vec<T> {
        let r = dot(xi, xi).sqrt();
        let raw: Vec<T> = self.directions.iter().map(|e| Self::bump(dot(xi, e) / r)).collect();
        let total = raw.iter().fold(T::zero(), |a, &b| a + b);
        raw.into_iter().map(|w| w / total).collect()
    }

    /// `theta_e(xi)` for the direction at `pos`; the zero mode goes to index 0.
    pub fn weight(&self, pos: usize, xi: &[T; 3]) -> T {
        if xi.iter().all(|&v| v == T::zero()) {
            return if pos == 0 { T::one() } else { T::zero() };
        }
        self.weights(xi)[pos]
    }
}

fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Spectral multiplication by `theta_e(xi / |xi|)`.
pub fn cone_project<T: Real>(
    f: &ComplexField<T>,
    e: &[T; 3],
    family: &ConePartition<T>,
) -> Result<ComplexField<T>, LpError> {
    let pos = family
        .position(e)
        .ok_or_else(|| LpError::UnknownDirection(e.map(|v| v.to_f64_lossy())))?;
    let repr = f.representation();
    let mut g = f.to_spectral();
    let grid = g.grid().clone();
    for (idx, v) in g.values_mut().iter_mut().enumerate() {
        let w = family.weight(pos, &grid.xi(idx));
        *v *= Complex::new(w, T::zero());
    }
    Ok(g.into_representation(repr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_field;
    use crate::spectral::{relative_l2, Representation};

    #[test]
    fn family_sizes_and_negation() {
        for (dim, count) in [(1, 2), (2, 8), (3, 26)] {
            let g = Grid::<f64>::new(dim, 16).unwrap();
            let fam = ConePartition::new(&g).unwrap();
            assert_eq!(fam.directions().len(), count);
            for e in fam.directions() {
                let neg = e.map(|v| -v);
                assert!(fam.position(&neg).is_some());
            }
            assert!(fam.covering_cosine() >= 0.55);
        }
    }

    #[test]
    fn partition_sums_to_field() {
        for dim in 1..=3 {
            let g = Grid::<f64>::new(dim, 16).unwrap();
            let fam = ConePartition::new(&g).unwrap();
            let f = random_field(&g, 5.0, 1.0, 9);
            let mut acc = ComplexField::zeros(&g, Representation::Physical);
            for e in fam.directions() {
                acc = &acc + &cone_project(&f, e, &fam).unwrap();
            }
            assert!(relative_l2(&acc, &f) < 1e-12);
        }
    }

    #[test]
    fn weights_are_supported_in_the_half_cone() {
        let g = Grid::<f64>::new(3, 16).unwrap();
        let fam = ConePartition::new(&g).unwrap();
        for idx in 1..g.len() {
            let xi = g.xi(idx);
            let r = dot(&xi, &xi).sqrt();
            let w = fam.weights(&xi);
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (e, wi) in fam.directions().iter().zip(&w) {
                if dot(&xi, e) / r <= 0.5 {
                    assert_eq!(*wi, 0.0);
                }
            }
        }
    }

    #[test]
    fn ray_along_a_direction_keeps_its_pole_weight() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let fam = ConePartition::new(&g).unwrap();
        let e = [1.0, 0.0, 0.0];
        let f = ComplexField::plane_wave(&g, [3, 0, 0], Complex::new(1.0, 0.0));
        let p = cone_project(&f, &e, &fam).unwrap();
        let pos = fam.position(&e).unwrap();
        let pole = fam.weight(pos, &[1.0, 0.0, 0.0]);
        assert!((p.norm_l2() - pole).abs() < 1e-13);
        assert!(pole > 0.5);
    }

    #[test]
    fn unknown_direction_is_rejected() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let fam = ConePartition::new(&g).unwrap();
        let f = ComplexField::zeros(&g, Representation::Physical);
        assert!(matches!(
            cone_project(&f, &[0.6, 0.8, 0.0], &fam),
            Err(LpError::UnknownDirection(_))
        ));
    }
}
