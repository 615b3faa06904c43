//! The scalar nonlinearity of the stereographic equation
//! `i d_t f - (-Delta)^s f = N(f)`, with `r = 1 / (1 + |f|^2)`:
//!
//! ```text
//! N(f) = H_s(f, r) + f r H_s(f, conj f) + f H_s(|f|^2, r) - f^2 H_s(conj f, r)
//! ```
//!
//! The transforms are shared between the four terms: only `(-Delta)^s` of
//! `f`, `r`, `|f|^2`, `f r` and `|f|^2 r` are needed, since the symbol is
//! real and even and so commutes with conjugation.

use num_complex::Complex;
use thiserror::Error;

use crate::commutator::h_s_symbol;
use crate::scalar::{c, Real};
use crate::spectral::{check_order, dealias, ComplexField, Dealias, Grid, Representation, SpectralError};

/// Pointwise bound on `|f|` accepted by [`nonlin`].
pub const MAX_AMPLITUDE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinError {
    #[error("|f| = {value} at sample {index} exceeds {MAX_AMPLITUDE}")]
    TooLarge { index: usize, value: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// How `1 / (1 + |f|^2)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RationalFactor {
    #[default]
    Exact,
    /// Truncated series `sum_{k=0}^{K} (-|f|^2)^k`; a diagnostic that is
    /// only meaningful for `|f| < 1`.
    Neumann(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NonlinOptions {
    /// Applied once to each final term.
    pub dealias: Dealias,
    pub factor: RationalFactor,
}

impl NonlinOptions {
    pub fn with_dealias(dealias: Dealias) -> Self {
        Self {
            dealias,
            ..Self::default()
        }
    }
}

/// The four summands of `N(f)` and their sum, in physical representation.
#[derive(Debug, Clone)]
pub struct NonlinearityBreakdown<T: Real> {
    pub term1: ComplexField<T>,
    pub term2: ComplexField<T>,
    pub term3: ComplexField<T>,
    pub term4: ComplexField<T>,
    /// `((term1 + term2) + term3) + term4`.
    pub total: ComplexField<T>,
}

fn check_amplitude<T: Real>(f: &ComplexField<T>) -> Result<(), NonlinError> {
    let limit = c::<T>(MAX_AMPLITUDE);
    for (index, z) in f.values().iter().enumerate() {
        if !(z.norm() <= limit) {
            return Err(NonlinError::TooLarge {
                index,
                value: z.norm().to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn rational_factor<T: Real>(a: T, factor: RationalFactor) -> T {
    match factor {
        RationalFactor::Exact => T::one() / (T::one() + a),
        RationalFactor::Neumann(order) => {
            let mut term = T::one();
            let mut sum = T::one();
            for _ in 0..order {
                term = -term * a;
                sum += term;
            }
            sum
        }
    }
}

fn field<T: Real>(grid: &Grid<T>, values: Vec<Complex<T>>) -> ComplexField<T> {
    ComplexField::from_values(grid, values, Representation::Physical).expect("sizes agree")
}

/// Undealiased physical samples of the four terms, and `(-Delta)^s f`.
fn raw_terms<T: Real>(
    f: &ComplexField<T>,
    symbol: &[T],
    factor: RationalFactor,
) -> ([Vec<Complex<T>>; 4], Vec<Complex<T>>) {
    let grid = f.grid();
    let fv = f.values();
    let zero = T::zero();
    let cx = |x: T| Complex::new(x, zero);
    let a: Vec<T> = fv.iter().map(|z| z.norm_sqr()).collect();
    let r: Vec<T> = a.iter().map(|&a| rational_factor(a, factor)).collect();
    let lap = |v: Vec<Complex<T>>| grid.apply_real_symbol(&v, symbol);
    let lap_real = |v: &[T]| -> Vec<T> {
        lap(v.iter().map(|&x| cx(x)).collect())
            .into_iter()
            .map(|z| z.re)
            .collect()
    };
    let lf = lap(fv.to_vec());
    let lr = lap_real(&r);
    let la = lap_real(&a);
    let lfr = lap(fv.iter().zip(&r).map(|(z, &r)| *z * r).collect());
    let ar: Vec<T> = a.iter().zip(&r).map(|(&a, &r)| a * r).collect();
    let lar = lap_real(&ar);

    let len = fv.len();
    let mut t1 = Vec::with_capacity(len);
    let mut t2 = Vec::with_capacity(len);
    let mut t3 = Vec::with_capacity(len);
    let mut t4 = Vec::with_capacity(len);
    for i in 0..len {
        let z = fv[i];
        let zc = z.conj();
        let h1 = lfr[i] - lf[i] * r[i] - z * lr[i];
        let hff = cx(la[i]) - lf[i] * zc - z * lf[i].conj();
        let h3 = lar[i] - la[i] * r[i] - a[i] * lr[i];
        let h4 = lfr[i].conj() - lf[i].conj() * r[i] - zc * lr[i];
        t1.push(h1);
        t2.push(z * r[i] * hff);
        t3.push(z * h3);
        t4.push(-(z * z) * h4);
    }
    ([t1, t2, t3, t4], lf)
}

/// Breakdown from physical samples with a precomputed symbol.
fn breakdown_symbol<T: Real>(f: &ComplexField<T>, symbol: &[T], opts: &NonlinOptions) -> NonlinearityBreakdown<T> {
    let grid = f.grid();
    let ([t1, t2, t3, t4], _) = raw_terms(f, symbol, opts.factor);
    let finish = |v: Vec<Complex<T>>| {
        let g = field(grid, v);
        if opts.dealias == Dealias::Off {
            g
        } else {
            dealias(&g, opts.dealias).into_physical()
        }
    };
    let (term1, term2, term3, term4) = (finish(t1), finish(t2), finish(t3), finish(t4));
    let total = &(&(&term1 + &term2) + &term3) + &term4;
    NonlinearityBreakdown {
        term1,
        term2,
        term3,
        term4,
        total,
    }
}

/// `N(f)` term by term, with two-thirds dealiasing and the exact rational factor.
pub fn nonlin<T: Real>(f: &ComplexField<T>, s: T) -> Result<NonlinearityBreakdown<T>, NonlinError> {
    nonlin_with(f, s, &NonlinOptions::default())
}

pub fn nonlin_with<T: Real>(
    f: &ComplexField<T>,
    s: T,
    opts: &NonlinOptions,
) -> Result<NonlinearityBreakdown<T>, NonlinError> {
    check_order(s)?;
    let f = f.to_physical();
    check_amplitude(&f)?;
    Ok(breakdown_symbol(&f, &f.grid().fractional_symbol(s), opts))
}

/// `d_t f = -i((-Delta)^s f + N(f))` with two-thirds dealiasing.
pub fn scalar_rhs<T: Real>(f: &ComplexField<T>, s: T) -> Result<ComplexField<T>, NonlinError> {
    scalar_rhs_with(f, s, Dealias::TwoThirds)
}

pub fn scalar_rhs_with<T: Real>(f: &ComplexField<T>, s: T, rule: Dealias) -> Result<ComplexField<T>, NonlinError> {
    check_order(s)?;
    let f = f.to_physical();
    check_amplitude(&f)?;
    let symbol = f.grid().fractional_symbol(s);
    Ok(scalar_rhs_symbol(&f, &symbol, &NonlinOptions::with_dealias(rule)))
}

/// `N(f)` and `(-Delta)^s f` in physical representation; the sum of the
/// terms is dealiased once.
pub(crate) fn total_symbol<T: Real>(
    f: &ComplexField<T>,
    symbol: &[T],
    opts: &NonlinOptions,
) -> (ComplexField<T>, Vec<Complex<T>>) {
    let ([t1, t2, t3, t4], lf) = raw_terms(f, symbol, opts.factor);
    let sum = (0..lf.len()).map(|i| ((t1[i] + t2[i]) + t3[i]) + t4[i]).collect();
    let n = field(f.grid(), sum);
    let n = if opts.dealias == Dealias::Off {
        n
    } else {
        dealias(&n, opts.dealias).into_physical()
    };
    (n, lf)
}

pub(crate) fn scalar_rhs_symbol<T: Real>(f: &ComplexField<T>, symbol: &[T], opts: &NonlinOptions) -> ComplexField<T> {
    let grid = f.grid();
    let (n, lf) = total_symbol(f, symbol, opts);
    let minus_i = Complex::new(T::zero(), -T::one());
    let values = lf
        .into_iter()
        .zip(n.values())
        .map(|(a, b)| minus_i * (a + *b))
        .collect();
    field(grid, values)
}

/// `N(f) - N(g)` assembled from differences. With `d = f - g` and
/// `r_f - r_g = (|g|^2 - |f|^2) r_f r_g`, every term telescopes through the
/// bilinearity of `H_s`.
pub fn nonlin_difference<T: Real>(
    f: &ComplexField<T>,
    g: &ComplexField<T>,
    s: T,
) -> Result<ComplexField<T>, NonlinError> {
    nonlin_difference_with(f, g, s, Dealias::TwoThirds)
}

pub fn nonlin_difference_with<T: Real>(
    f: &ComplexField<T>,
    g: &ComplexField<T>,
    s: T,
    rule: Dealias,
) -> Result<ComplexField<T>, NonlinError> {
    check_order(s)?;
    if f.grid() != g.grid() {
        return Err(SpectralError::GridMismatch.into());
    }
    let (f, g) = (f.to_physical(), g.to_physical());
    check_amplitude(&f)?;
    check_amplitude(&g)?;
    let grid = f.grid();
    let symbol = grid.fractional_symbol(s);
    let h = |x: &ComplexField<T>, y: &ComplexField<T>| h_s_symbol(x, y, &symbol, Dealias::Off);
    let map2 = |x: &ComplexField<T>, y: &ComplexField<T>, op: &dyn Fn(Complex<T>, Complex<T>) -> Complex<T>| {
        field(
            grid,
            x.values().iter().zip(y.values()).map(|(a, b)| op(*a, *b)).collect(),
        )
    };
    let cx = |x: T| Complex::new(x, T::zero());

    let d = &f - &g;
    let sum = &f + &g;
    let a_f = f.map(|z| cx(z.norm_sqr()));
    let a_g = g.map(|z| cx(z.norm_sqr()));
    // |f|^2 - |g|^2 = Re(d conj(f + g))
    let da = map2(&d, &sum, &|d, s| cx((d * s.conj()).re));
    let r_f = a_f.map(|a| cx(T::one() / (T::one() + a.re)));
    let r_g = a_g.map(|a| cx(T::one() / (T::one() + a.re)));
    let dr = field(
        grid,
        (0..grid.len())
            .map(|i| -da.values()[i] * r_f.values()[i] * r_g.values()[i])
            .collect(),
    );
    let fc = f.conj();
    let gc = g.conj();
    let dc = d.conj();

    let term1 = &h(&d, &r_f) + &h(&g, &dr);

    let dp = &d.mul_pointwise(&r_f) + &g.mul_pointwise(&dr);
    let p_g = g.mul_pointwise(&r_g);
    let dh2 = &h(&d, &fc) + &h(&g, &dc);
    let term2 = &dp.mul_pointwise(&h(&f, &fc)) + &p_g.mul_pointwise(&dh2);

    let dh3 = &h(&da, &r_f) + &h(&a_g, &dr);
    let term3 = &d.mul_pointwise(&h(&a_f, &r_f)) + &g.mul_pointwise(&dh3);

    let dsq = d.mul_pointwise(&sum);
    let dh4 = &h(&dc, &r_f) + &h(&gc, &dr);
    let term4 = -&(&dsq.mul_pointwise(&h(&fc, &r_f)) + &g.mul_pointwise(&g).mul_pointwise(&dh4));

    let total = &(&(&term1 + &term2) + &term3) + &term4;
    Ok(if rule == Dealias::Off {
        total
    } else {
        dealias(&total, rule).into_physical()
    })
}
