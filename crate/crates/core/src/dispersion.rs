//! The characteristic multiplier `N(xi', tau)`, the factor `K(xi', tau)` and
//! the factorization
//!
//! ```text
//! tau + |xi|^{2s} = (L(xi, tau) + K(xi', tau)) (xi_1 - N)
//! ```
//!
//! for `xi = xi_1 e + xi'`. Points are parametrized by the modulation
//! `mu = tau + |xi|^{2s}` rather than by `tau`: near the characteristic
//! surface `tau` is the difference of two large numbers, while `mu` is the
//! quantity the factorization resolves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{c, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("outside the domain of N: {0}")]
    Domain(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("no admissible sample found: {0}")]
    Sampling(String),
}

fn check_s<T: Real>(s: T) -> Result<(), DispersionError> {
    if s > T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(DispersionError::Parameter(format!("s must lie in (0, 1], got {s}")))
    }
}

/// `N = ((-tau)^{1/s} - |xi'|^2)^{1/2}`.
pub fn big_n<T: Real>(xi_perp_sq: T, tau: T, s: T) -> Result<T, DispersionError> {
    check_s(s)?;
    if !(tau < T::zero()) {
        return Err(DispersionError::Domain(format!("tau < 0 fails (tau = {tau})")));
    }
    let root = (-tau).powf(T::one() / s);
    if !(root >= xi_perp_sq) {
        return Err(DispersionError::Domain(format!(
            "(-tau)^(1/s) >= |xi'|^2 fails ({root} < {xi_perp_sq})"
        )));
    }
    Ok((root - xi_perp_sq).sqrt())
}

/// `K = 2s (N^2 + |xi'|^2)^{s-1} N`.
pub fn big_k<T: Real>(xi_perp_sq: T, tau: T, s: T) -> Result<T, DispersionError> {
    let n = big_n(xi_perp_sq, tau, s)?;
    Ok(k_from_n(n, xi_perp_sq, s))
}

fn k_from_n<T: Real>(n: T, xi_perp_sq: T, s: T) -> T {
    (s + s) * (n * n + xi_perp_sq).powf(s - T::one()) * n
}

/// A sample `(xi_1, |xi'|^2, mu)` with its dyadic labels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AdmissiblePoint<T> {
    pub k: u32,
    pub k_prime: u32,
    pub xi1: T,
    pub xi_perp_sq: T,
    /// `tau + |xi|^{2s}`.
    pub mu: T,
}

impl<T: Real> AdmissiblePoint<T> {
    /// Validates the dyadic ranges, the modulation bound and the domain of `N`.
    pub fn new(k: u32, k_prime: u32, xi1: T, xi_perp_sq: T, mu: T, s: T) -> Result<Self, DispersionError> {
        check_s(s)?;
        check_indices(k, k_prime)?;
        let p = Self {
            k,
            k_prime,
            xi1,
            xi_perp_sq,
            mu,
        };
        let two = T::one() + T::one();
        let r = p.xi_norm_sq().sqrt();
        let (kf, kpf) = (T::from_u32(k).unwrap(), T::from_u32(k_prime).unwrap());
        let in_range = |x: T, j: T| x >= two.powf(j - T::one()) && x <= two.powf(j + T::one());
        if !(xi_perp_sq >= T::zero()) || !in_range(r, kf) {
            return Err(DispersionError::Domain(format!(
                "|xi| = {r} outside [2^(k-1), 2^(k+1)]"
            )));
        }
        if !in_range(xi1, kpf) {
            return Err(DispersionError::Domain(format!(
                "xi_1 = {xi1} outside [2^(k'-1), 2^(k'+1)]"
            )));
        }
        if mu.abs() > modulation_bound(k, k_prime, s) {
            return Err(DispersionError::Domain(format!(
                "|tau + |xi|^2s| = {} above the bound",
                mu.abs()
            )));
        }
        big_n(xi_perp_sq, p.tau(s), s)?;
        Ok(p)
    }

    pub fn xi_norm_sq(&self) -> T {
        self.xi1 * self.xi1 + self.xi_perp_sq
    }

    pub fn tau(&self, s: T) -> T {
        self.mu - self.xi_norm_sq().powf(s)
    }

    /// `q = k' / k`.
    pub fn q(&self) -> T {
        T::from_u32(self.k_prime).unwrap() / T::from_u32(self.k).unwrap()
    }
}

fn check_indices(k: u32, k_prime: u32) -> Result<(), DispersionError> {
    let lo = (4 * k).div_ceil(5);
    if k == 0 || k_prime < lo || k_prime > k + 1 {
        return Err(DispersionError::Parameter(format!(
            "need k >= 1 and k' in [{lo}, {}], got k = {k}, k' = {k_prime}",
            k + 1
        )));
    }
    Ok(())
}

/// `2^{2k(s + q - 1) - 8}`.
pub fn modulation_bound<T: Real>(k: u32, k_prime: u32, s: T) -> T {
    let two = T::one() + T::one();
    let kf = T::from_u32(k).unwrap();
    let kpf = T::from_u32(k_prime).unwrap();
    two.powf(two * (kf * s + kpf - kf) - c(8.0))
}

/// `(1 + x)^s - 1 - s x` without cancellation near `x = 0`.
fn binomial_remainder<T: Real>(x: T, s: T) -> T {
    if x.abs() < c(0.1) {
        // sum_{j >= 2} binom(s, j) x^j
        let mut coef = s;
        let mut pow = x;
        let mut sum = T::zero();
        for j in 2..60 {
            let jf = T::from_usize_lossy(j);
            coef = coef * (s - jf + T::one()) / jf;
            pow *= x;
            let term = coef * pow;
            sum += term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (s * x.ln_1p()).exp_m1() - s * x
    }
}

/// The pieces of the factorization at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorization<T> {
    pub n: T,
    /// `xi_1 - N`.
    pub h: T,
    pub k: T,
    pub l: T,
}

/// `N`, `xi_1 - N`, `K` and `L` at `point`. `L` is the quotient
/// `(tau + |xi|^{2s} - K (xi_1 - N)) / (xi_1 - N)`, evaluated as a binomial
/// remainder; it tends to 0 as `xi_1 -> N`.
pub fn factorization<T: Real>(point: &AdmissiblePoint<T>, s: T) -> Factorization<T> {
    let x_sq = point.xi_norm_sq();
    let p = point.xi_perp_sq;
    let a = x_sq.powf(s);
    // xi_1^2 - N^2 = |xi|^2 (1 - (1 - mu/A)^{1/s})
    let d = -x_sq * ((-point.mu / a).ln_1p() / s).exp_m1();
    let n = (point.xi1 * point.xi1 - d).sqrt();
    let h = d / (point.xi1 + n);
    let k = k_from_n(n, p, s);
    let base = n * n + p;
    let l = if h == T::zero() {
        T::zero()
    } else {
        let y = h * h / base;
        let x = (n + n) * h / base + y;
        base.powf(s) * (binomial_remainder(x, s) + s * y) / h
    };
    Factorization { n, h, k, l }
}

/// `|mu - (L + K)(xi_1 - N)| / max(|mu|, eps)`.
pub fn factorization_residual<T: Real>(point: &AdmissiblePoint<T>, s: T) -> T {
    let f = factorization(point, s);
    let rebuilt = (f.l + f.k) * f.h;
    (point.mu - rebuilt).abs() / point.mu.abs().max(T::epsilon())
}

/// Draws admissible points for `(k, k')`: `xi_1` uniform on its dyadic
/// range, `|xi|` uniform on `[max(2^{k-1}, xi_1), 2^{k+1}]` and `mu` uniform
/// on `[-B, B]`. Draws outside the domain of `N` are rejected. Sampling is
/// sharded, each shard on its own ChaCha stream of `seed`, so the result
/// does not depend on the thread count.
pub fn sample_admissible(
    k: u32,
    k_prime: u32,
    s: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<AdmissiblePoint<f64>>, DispersionError> {
    check_s(s)?;
    check_indices(k, k_prime)?;
    const SHARD: usize = 1024;
    let shards = count.div_ceil(SHARD);
    let bound = modulation_bound(k, k_prime, s);
    let (kf, kpf) = (k as f64, k_prime as f64);
    let xi1_lo = 2f64.powf(kpf - 1.0);
    let xi1_hi = 2f64.powf(kpf + 1.0).min(2f64.powf(kf + 1.0));
    if xi1_lo > xi1_hi {
        return Err(DispersionError::Sampling("xi_1 range is empty".into()));
    }
    let points: Vec<AdmissiblePoint<f64>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let want = SHARD.min(count - shard * SHARD);
            let mut out = Vec::with_capacity(want);
            let mut attempts = 0;
            while out.len() < want && attempts < 20 * want {
                attempts += 1;
                let xi1 = rng.random_range(xi1_lo..=xi1_hi);
                let r_lo = 2f64.powf(kf - 1.0).max(xi1);
                let r = rng.random_range(r_lo..=2f64.powf(kf + 1.0));
                let mu = rng.random_range(-bound..=bound);
                let perp = (r * r - xi1 * xi1).max(0.0);
                if let Ok(p) = AdmissiblePoint::new(k, k_prime, xi1, perp, mu, s) {
                    out.push(p);
                }
            }
            out
        })
        .flatten()
        .collect();
    if points.is_empty() {
        return Err(DispersionError::Sampling(format!("k = {k}, k' = {k_prime}, s = {s}")));
    }
    Ok(points)
}

/// Outcome of [`lemma_multiplier_check`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MultiplierReport {
    pub k: u32,
    pub k_prime: u32,
    pub s: f64,
    pub samples: usize,
    /// Fraction of samples with `N` in `[2^{k'-2}, 2^{k'+2}]`.
    pub n_range_fraction: f64,
    /// Extremes of `|tau + |xi|^{2s}| / (2^{k(2s-2+q)} |xi_1 - N|)`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub residual_max: f64,
    pub pass: bool,
}

/// Ratio bracket required of the comparability ratio.
pub const RATIO_BRACKET: (f64, f64) = (1.0 / 32.0, 32.0);
/// Bracket required of the `L` magnitude ratio.
pub const L_BRACKET: (f64, f64) = (1.0 / 64.0, 64.0);
/// Required factorization accuracy.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub fn multiplier_report(k: u32, k_prime: u32, s: f64, points: &[AdmissiblePoint<f64>]) -> MultiplierReport {
    let lo = 2f64.powi(k_prime as i32 - 2);
    let hi = 2f64.powi(k_prime as i32 + 2);
    let scale = 2f64.powf(k as f64 * (2.0 * s - 2.0) + k_prime as f64);
    let mut in_range = 0usize;
    let (mut rmin, mut rmax, mut res) = (f64::INFINITY, 0.0f64, 0.0f64);
    for p in points {
        let f = factorization(p, s);
        if f.n >= lo && f.n <= hi {
            in_range += 1;
        }
        if f.h != 0.0 {
            let ratio = p.mu.abs() / (scale * f.h.abs());
            rmin = rmin.min(ratio);
            rmax = rmax.max(ratio);
        }
        res = res.max(factorization_residual(p, s));
    }
    let fraction = in_range as f64 / points.len().max(1) as f64;
    let pass = !points.is_empty()
        && fraction == 1.0
        && rmin >= RATIO_BRACKET.0
        && rmax <= RATIO_BRACKET.1
        && res <= RESIDUAL_TOL;
    MultiplierReport {
        k,
        k_prime,
        s,
        samples: points.len(),
        n_range_fraction: fraction,
        ratio_min: rmin,
        ratio_max: rmax,
        residual_max: res,
        pass,
    }
}

/// Samples `sample_count` admissible points and checks the range of `N`,
/// the comparability ratio and the factorization residual.
pub fn lemma_multiplier_check(
    k: u32,
    k_prime: u32,
    s: f64,
    sample_count: usize,
    seed: u64,
) -> Result<MultiplierReport, DispersionError> {
    let points = sample_admissible(k, k_prime, s, sample_count, seed)?;
    Ok(multiplier_report(k, k_prime, s, &points))
}

/// Extremes of `|L| / (2^{k(2s-2)} |xi_1 - N|)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LMagnitudeReport {
    pub samples: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub pass: bool,
}

pub fn l_magnitude_check(points: &[AdmissiblePoint<f64>], s: f64) -> LMagnitudeReport {
    let (mut lo, mut hi, mut used) = (f64::INFINITY, 0.0f64, 0usize);
    for p in points {
        let f = factorization(p, s);
        if f.h == 0.0 {
            continue;
        }
        let ratio = f.l.abs() / (2f64.powf(p.k as f64 * (2.0 * s - 2.0)) * f.h.abs());
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    LMagnitudeReport {
        samples: used,
        ratio_min: lo,
        ratio_max: hi,
        pass: used > 0 && lo >= L_BRACKET.0 && hi <= L_BRACKET.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_and_k_examples() {
        assert!((big_n(0.0f64, -8.0, 0.75).unwrap() - 4.0).abs() < 1e-13);
        let tau = -(25f64.powf(0.75));
        assert!((big_n(9.0, tau, 0.75).unwrap() - 4.0).abs() < 1e-13);
        assert!((big_k(0.0f64, -8.0, 0.75).unwrap() - 3.0).abs() < 1e-13);
        let a = big_n(9.0, tau, 0.75).unwrap();
        let b = big_n(9.0, tau - 1e-9, 0.75).unwrap();
        assert!((a - b).abs() <= 1e-6);
    }

    #[test]
    fn domain_errors_name_the_inequality() {
        match big_n(0.0, 1.0, 0.75) {
            Err(DispersionError::Domain(msg)) => assert!(msg.contains("tau < 0")),
            other => panic!("{other:?}"),
        }
        match big_n(100.0, -8.0, 0.75) {
            Err(DispersionError::Domain(msg)) => assert!(msg.contains(">= |xi'|^2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn k_homogeneity() {
        let (p, tau, s) = (2.0f64, -30.0f64, 0.7f64);
        for lambda in [0.5f64, 2.0, 3.7] {
            let lhs = big_k(lambda * lambda * p, lambda.powf(2.0 * s) * tau, s).unwrap();
            let rhs = lambda.powf(2.0 * s - 1.0) * big_k(p, tau, s).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn on_the_surface_everything_vanishes() {
        let p = AdmissiblePoint {
            k: 10,
            k_prime: 9,
            xi1: 600.0,
            xi_perp_sq: 250_000.0,
            mu: 0.0,
        };
        let f = factorization(&p, 0.75);
        assert_eq!(f.h, 0.0);
        assert_eq!(f.l, 0.0);
        assert_eq!(factorization_residual(&p, 0.75), 0.0);
    }

    #[test]
    fn quadratic_case_has_l_equal_to_h() {
        let pts = sample_admissible(12, 11, 1.0, 200, 3).unwrap();
        for p in &pts {
            let f = factorization(p, 1.0);
            assert!((f.l - f.h).abs() <= 1e-12 * f.h.abs().max(1e-300));
            assert!((f.k - 2.0 * f.n).abs() <= 1e-12 * f.n);
        }
        let rep = l_magnitude_check(&pts, 1.0);
        assert!((rep.ratio_min - 1.0).abs() < 1e-9 && (rep.ratio_max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let a = sample_admissible(15, 13, 0.6, 3000, 11).unwrap();
        let b = sample_admissible(15, 13, 0.6, 3000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3000);
        for p in &a {
            assert!(AdmissiblePoint::new(p.k, p.k_prime, p.xi1, p.xi_perp_sq, p.mu, 0.6).is_ok());
        }
    }

    #[test]
    fn index_checks() {
        assert!(sample_admissible(20, 15, 0.75, 10, 1).is_err());
        assert!(sample_admissible(20, 22, 0.75, 10, 1).is_err());
    }
}
