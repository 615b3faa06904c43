//! Fractional Leibniz commutators and the Taylor machinery behind their
//! high-low frequency expansion.

mod taylor;

pub use taylor::{
    a_m, d_alpha_h0, enumerate_pairings, fd_d_alpha_h0, pairing_count, series_check, taylor_coefficient_c,
    taylor_truncation, MultiIndex, PairingFamily, SeriesCheck, Truncation, ALPHA_CAP, MAX_PAIRING_M,
};

use thiserror::Error;

use crate::scalar::Real;
use crate::spectral::{check_order, product, ComplexField, Dealias, Grid, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommutatorError {
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("pairing count for m = {m} exceeds the supported range (m <= {max})")]
    Range { m: usize, max: usize },
    #[error("derivative of |xi - eta|^(2s) is singular at xi = 0")]
    Singular,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Physical samples of `(-Delta)^s v` given the precomputed symbol.
pub(crate) fn lap<T: Real>(grid: &Grid<T>, v: &ComplexField<T>, symbol: &[T]) -> ComplexField<T> {
    let v = v.to_physical();
    let out = grid.apply_real_symbol(v.values(), symbol);
    ComplexField::from_values(grid, out, crate::spectral::Representation::Physical).expect("sizes agree")
}

/// `H_s(f, g)` with a precomputed symbol.
pub(crate) fn h_s_symbol<T: Real>(
    f: &ComplexField<T>,
    g: &ComplexField<T>,
    symbol: &[T],
    rule: Dealias,
) -> ComplexField<T> {
    let grid = f.grid();
    let (f, g) = (f.to_physical(), g.to_physical());
    let fg = product(&f, &g, rule);
    let a = lap(grid, &fg, symbol);
    let b = product(&lap(grid, &f, symbol), &g, rule);
    let c = product(&f, &lap(grid, &g, symbol), rule);
    &(&a - &b) - &c
}

/// `H_s(f, g) = (-Delta)^s(fg) - ((-Delta)^s f) g - f (-Delta)^s g` with
/// two-thirds dealiasing of every product.
pub fn h_s<T: Real>(f: &ComplexField<T>, g: &ComplexField<T>, s: T) -> Result<ComplexField<T>, CommutatorError> {
    h_s_with(f, g, s, Dealias::TwoThirds)
}

pub fn h_s_with<T: Real>(
    f: &ComplexField<T>,
    g: &ComplexField<T>,
    s: T,
    rule: Dealias,
) -> Result<ComplexField<T>, CommutatorError> {
    check_order(s)?;
    if f.grid() != g.grid() {
        return Err(SpectralError::GridMismatch.into());
    }
    Ok(h_s_symbol(f, g, &f.grid().fractional_symbol(s), rule))
}

/// `H~(f, g) = (-Delta)^s(fg) - ((-Delta)^s f) g` with two-thirds dealiasing.
pub fn h_tilde<T: Real>(f: &ComplexField<T>, g: &ComplexField<T>, s: T) -> Result<ComplexField<T>, CommutatorError> {
    h_tilde_with(f, g, s, Dealias::TwoThirds)
}

pub fn h_tilde_with<T: Real>(
    f: &ComplexField<T>,
    g: &ComplexField<T>,
    s: T,
    rule: Dealias,
) -> Result<ComplexField<T>, CommutatorError> {
    check_order(s)?;
    if f.grid() != g.grid() {
        return Err(SpectralError::GridMismatch.into());
    }
    let grid = f.grid();
    let symbol = grid.fractional_symbol(s);
    let (f, g) = (f.to_physical(), g.to_physical());
    let a = lap(grid, &product(&f, &g, rule), &symbol);
    let b = product(&lap(grid, &f, &symbol), &g, rule);
    Ok(&a - &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_field;
    use crate::spectral::{apply_symbol, relative_l2, Representation};
    use num_complex::Complex;

    fn cx(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn constant_argument_gives_zero() {
        let g = Grid::<f64>::new(2, 16).unwrap();
        let f = random_field(&g, 2.0, 1.0, 1);
        let c = ComplexField::constant(&g, Complex::new(0.4, -0.2));
        assert!(h_s(&f, &c, 0.7).unwrap().max_abs() < 1e-13);
        assert!(h_tilde(&f, &c, 0.7).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn s_one_is_the_leibniz_defect() {
        let g = Grid::<f64>::new(2, 32).unwrap();
        let f = random_field(&g, 2.0, 1.0, 2);
        let h = random_field(&g, 2.0, 1.0, 3);
        let hs = h_s_with(&f, &h, 1.0, Dealias::Off).unwrap();
        let mut expect = ComplexField::zeros(&g, Representation::Physical);
        for axis in 0..2 {
            let d = |v: &ComplexField<f64>| {
                apply_symbol(v, |xi| Complex::new(0.0, xi[axis]))
                    .unwrap()
                    .into_physical()
            };
            expect = &expect + &d(&f).mul_pointwise(&d(&h));
        }
        let expect = &expect * cx(-2.0);
        assert!((&hs - &expect).max_abs() < 1e-10);
    }

    #[test]
    fn single_mode_symbols() {
        let g = Grid::<f64>::new(2, 32).unwrap();
        let s = 0.65;
        let (m1, m2) = ([3, -1, 0], [-2, 4, 0]);
        let f = ComplexField::plane_wave(&g, m1, cx(1.0));
        let h = ComplexField::plane_wave(&g, m2, cx(1.0));
        let n = |m: [i32; 3]| ((m[0] * m[0] + m[1] * m[1]) as f64).powf(s);
        let sum = [1, 3, 0];
        let out = ComplexField::plane_wave(&g, sum, cx(1.0));
        let hs = h_s(&f, &h, s).unwrap();
        let expect = &out * cx(n(sum) - n(m1) - n(m2));
        assert!((&hs - &expect).max_abs() < 1e-12);
        let ht = h_tilde(&f, &h, s).unwrap();
        let expect = &out * cx(n(sum) - n(m1));
        assert!((&ht - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn tilde_is_h_plus_one_term() {
        let g = Grid::<f64>::new(1, 64).unwrap();
        let f = random_field(&g, 4.0, 1.0, 4);
        let h = random_field(&g, 4.0, 1.0, 5);
        let s = 0.8;
        let lhs = h_tilde(&f, &h, s).unwrap();
        let lh = crate::spectral::fractional_laplacian(&h, s).unwrap();
        let rhs = &h_s(&f, &h, s).unwrap() + &product(&f, &lh.into_physical(), Dealias::TwoThirds);
        assert!(relative_l2(&lhs, &rhs) < 1e-13);
    }
}
