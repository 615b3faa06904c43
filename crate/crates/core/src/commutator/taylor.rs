//! Derivatives of `eta -> |xi - eta|^{2s}` at `eta = 0` through pairing
//! combinatorics, and the truncated high-low expansion of `H~`.
//!
//! For `alpha` with `|alpha| = m`, write its slots as indices
//! `i_1, ..., i_m`. Then
//!
//! ```text
//! d^alpha_xi |xi|^{2s} = |xi|^{2s-m} sum_k C^k_{s,m} sum_{p in P_k} delta^p prod_{j unpaired} R^{i_j}
//! ```
//!
//! with `R^i = xi_i / |xi|`, `P_k` the sets of `k` disjoint pairs of slots and
//! `delta^p` the product of Kronecker deltas over the pairs. Differentiating
//! in `eta` instead of `xi` flips the sign for odd `m`, and
//! `|xi|^{2s} - |xi - eta|^{2s} = -sum_{|alpha| >= 1} D^alpha h(0) eta^alpha / alpha!`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex;
use num_traits::{FromPrimitive, Num};

use super::CommutatorError;
use crate::scalar::Real;
use crate::spectral::{apply_symbol, check_order, ComplexField, Dealias, Grid};

/// Largest supported `|alpha|`.
pub const ALPHA_CAP: usize = 6;
/// Largest `m` accepted by [`pairing_count`].
pub const MAX_PAIRING_M: usize = 20;
/// Largest `m` accepted by [`enumerate_pairings`].
const MAX_ENUMERATION_M: usize = 12;

/// A multi-index `alpha` in `n <= 3` dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    alpha: Vec<usize>,
}

impl MultiIndex {
    pub fn new(alpha: &[usize]) -> Result<Self, CommutatorError> {
        if alpha.is_empty() || alpha.len() > 3 {
            return Err(CommutatorError::Parameter(format!(
                "multi-index needs 1 to 3 entries, got {}",
                alpha.len()
            )));
        }
        let m: usize = alpha.iter().sum();
        if m > ALPHA_CAP {
            return Err(CommutatorError::Parameter(format!(
                "|alpha| = {m} exceeds the cap {ALPHA_CAP}"
            )));
        }
        Ok(Self { alpha: alpha.to_vec() })
    }

    /// Every multi-index of order exactly `m` in `n` dimensions, in
    /// lexicographic order.
    pub fn all_of_order(n: usize, m: usize) -> Vec<Self> {
        fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == n {
                cur.push(left);
                out.push(MultiIndex { alpha: cur.clone() });
                cur.pop();
                return;
            }
            for a in (0..=left).rev() {
                cur.push(a);
                rec(n, left - a, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, m, &mut Vec::with_capacity(n), &mut out);
        out
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.alpha
    }

    /// `|alpha|`.
    pub fn order(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// `alpha! = prod_i alpha_i!`.
    pub fn factorial(&self) -> u64 {
        self.alpha.iter().map(|&a| (1..=a as u64).product::<u64>()).product()
    }

    /// Slot list `i_1 <= ... <= i_m`, axis `i` repeated `alpha_i` times.
    pub fn slots(&self) -> Vec<usize> {
        self.alpha
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| std::iter::repeat_n(i, a))
            .collect()
    }

    /// `eta^alpha`.
    pub fn monomial<T: Real>(&self, eta: &[T]) -> T {
        self.alpha
            .iter()
            .zip(eta)
            .fold(T::one(), |acc, (&a, &e)| acc * e.powi(a as i32))
    }
}

/// `C^j_{s,m} = prod_{i=0}^{m-j-1} (2s - 2i)`. Works over any number ring,
/// so exact rationals give exact coefficients.
pub fn taylor_coefficient_c<T: Num + Copy + FromPrimitive>(s: T, m: usize, j: usize) -> Result<T, CommutatorError> {
    if m == 0 || j > m / 2 {
        return Err(CommutatorError::Parameter(format!(
            "need m >= 1 and 0 <= j <= m/2, got m = {m}, j = {j}"
        )));
    }
    let two = T::one() + T::one();
    let mut p = T::one();
    for i in 0..m - j {
        let i = T::from_usize(i).ok_or_else(|| CommutatorError::Parameter("index not representable".into()))?;
        p = p * (two * s - two * i);
    }
    Ok(p)
}

fn check_pairing_args(m: usize, k: usize, max: usize) -> Result<(), CommutatorError> {
    if m > max {
        return Err(CommutatorError::Range { m, max });
    }
    if 2 * k > m {
        return Err(CommutatorError::Parameter(format!(
            "need 2k <= m, got m = {m}, k = {k}"
        )));
    }
    Ok(())
}

/// `|P_k| = m! / ((m - 2k)! 2^k k!)`.
pub fn pairing_count(m: usize, k: usize) -> Result<u128, CommutatorError> {
    check_pairing_args(m, k, MAX_PAIRING_M)?;
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    Ok(fact(m) / (fact(m - 2 * k) * (1u128 << k) * fact(k)))
}

/// All ways of choosing `k` disjoint unordered pairs among `m` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingFamily {
    pub m: usize,
    pub k: usize,
    /// Each pairing as a list of `(a, b)` with `a < b`, sorted by `a`.
    pub pairings: Vec<Vec<(usize, usize)>>,
}

impl PairingFamily {
    pub fn len(&self) -> usize {
        self.pairings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairings.is_empty()
    }

    /// Slots left unpaired by pairing `p`.
    pub fn unpaired(&self, p: usize) -> Vec<usize> {
        let mut used = vec![false; self.m];
        for &(a, b) in &self.pairings[p] {
            used[a] = true;
            used[b] = true;
        }
        (0..self.m).filter(|&i| !used[i]).collect()
    }
}

fn build_pairings(m: usize, k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(
        m: usize,
        slot: usize,
        free_left: usize,
        used: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let mut slot = slot;
        while slot < m && used[slot] {
            slot += 1;
        }
        if slot == m {
            if free_left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if free_left > 0 {
            used[slot] = true;
            rec(m, slot + 1, free_left - 1, used, cur, out);
            used[slot] = false;
        }
        for other in slot + 1..m {
            if used[other] {
                continue;
            }
            used[slot] = true;
            used[other] = true;
            cur.push((slot, other));
            rec(m, slot + 1, free_left, used, cur, out);
            cur.pop();
            used[other] = false;
            used[slot] = false;
        }
    }
    let mut out = Vec::new();
    rec(m, 0, m - 2 * k, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

type PairingCache = RwLock<HashMap<(usize, usize), Arc<PairingFamily>>>;

fn cache() -> &'static PairingCache {
    static CACHE: OnceLock<PairingCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Enumerates `P_k` for `m` slots; results are memoized.
pub fn enumerate_pairings(m: usize, k: usize) -> Result<Arc<PairingFamily>, CommutatorError> {
    check_pairing_args(m, k, MAX_ENUMERATION_M)?;
    if let Some(found) = cache().read().expect("pairing cache poisoned").get(&(m, k)) {
        return Ok(found.clone());
    }
    let family = Arc::new(PairingFamily {
        m,
        k,
        pairings: build_pairings(m, k),
    });
    let mut w = cache().write().expect("pairing cache poisoned");
    Ok(w.entry((m, k)).or_insert(family).clone())
}

/// `D^alpha h(0)` for `h(eta) = |xi - eta|^{2s}`.
pub fn d_alpha_h0<T: Real>(xi: &[T], alpha: &MultiIndex, s: T) -> Result<T, CommutatorError> {
    check_order(s)?;
    if xi.len() != alpha.dim() {
        return Err(CommutatorError::Parameter(format!(
            "xi has {} entries but alpha has {}",
            xi.len(),
            alpha.dim()
        )));
    }
    let r2 = xi.iter().fold(T::zero(), |a, &x| a + x * x);
    if r2 == T::zero() {
        return Err(CommutatorError::Singular);
    }
    let r = r2.sqrt();
    let m = alpha.order();
    let two_s = s + s;
    if m == 0 {
        return Ok(r.powf(two_s));
    }
    let slots = alpha.slots();
    let rr: Vec<T> = slots.iter().map(|&i| xi[i] / r).collect();
    let mut total = T::zero();
    for k in 0..=m / 2 {
        let ck = taylor_coefficient_c(s, m, k)?;
        if ck == T::zero() {
            continue;
        }
        let family = enumerate_pairings(m, k)?;
        let mut inner = T::zero();
        for (p, pairs) in family.pairings.iter().enumerate() {
            if pairs.iter().any(|&(a, b)| slots[a] != slots[b]) {
                continue;
            }
            inner += family.unpaired(p).iter().fold(T::one(), |acc, &j| acc * rr[j]);
        }
        total += ck * inner;
    }
    let sign = if m % 2 == 1 { -T::one() } else { T::one() };
    Ok(sign * r.powf(two_s - T::from_usize_lossy(m)) * total)
}

/// 4th-order central weights and half-width for derivative order `d <= 4`.
fn stencil(d: usize) -> (&'static [f64], i32) {
    match d {
        0 => (&[1.0], 0),
        1 => (&[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0], 2),
        2 => (&[-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0], 2),
        3 => (&[0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125], 3),
        _ => (&[-1.0 / 6.0, 2.0, -6.5, 28.0 / 3.0, -6.5, 2.0, -1.0 / 6.0], 3),
    }
}

fn tensor_difference(xi: &[f64], alpha: &[usize], s: f64, h: f64) -> f64 {
    let n = xi.len();
    let stencils: Vec<_> = alpha.iter().map(|&a| stencil(a)).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let mut w = 1.0;
        let mut r2 = 0.0;
        for axis in 0..n {
            let (c, half) = stencils[axis];
            w *= c[idx[axis]];
            let eta = (idx[axis] as i32 - half) as f64 * h;
            r2 += (xi[axis] - eta).powi(2);
        }
        if w != 0.0 {
            total += w * r2.powf(s);
        }
        let mut axis = 0;
        loop {
            if axis == n {
                let m: usize = alpha.iter().sum();
                return total / h.powi(m as i32);
            }
            idx[axis] += 1;
            if idx[axis] < stencils[axis].0.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Finite-difference estimate of [`d_alpha_h0`] for `|alpha| <= 4`:
/// tensor-product 4th-order central stencils with one Richardson step,
/// base step `h = 0.02 |xi|`.
pub fn fd_d_alpha_h0(xi: &[f64], alpha: &MultiIndex, s: f64) -> Result<f64, CommutatorError> {
    if alpha.as_slice().iter().any(|&a| a > 4) {
        return Err(CommutatorError::Parameter(
            "stencils cover per-axis orders up to 4".into(),
        ));
    }
    let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(CommutatorError::Singular);
    }
    let h = 0.02 * r;
    let coarse = tensor_difference(xi, alpha.as_slice(), s, h);
    let fine = tensor_difference(xi, alpha.as_slice(), s, h / 2.0);
    Ok((16.0 * fine - coarse) / 15.0)
}

/// Result of [`taylor_truncation`].
#[derive(Debug, Clone)]
pub struct Truncation<T: Real> {
    pub approx: ComplexField<T>,
    /// `||approx - H~(f, g)|| / ||H~(f, g)||`.
    pub error: T,
    /// `max |eta| / min |zeta|` over the occupied modes of `g` and `f`.
    pub separation: T,
}

fn occupied_radii<T: Real>(f: &ComplexField<T>) -> Vec<T> {
    let fh = f.to_spectral();
    let peak = fh.values().iter().fold(T::zero(), |a, v| a.max(v.norm()));
    let floor = peak * T::lit(1e-13);
    fh.values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > floor)
        .map(|(idx, _)| fh.grid().xi_norm_sq(idx).sqrt())
        .collect()
}

/// Order-`M` surrogate of `H~(f_hi, g_lo)`: the sum over `1 <= |alpha| <= M`
/// of the multiplier `-D^alpha h_xi(0) / alpha!` (in the output frequency
/// `xi`) applied to `f_hi * (-i grad)^alpha g_lo`. No dealiasing is applied
/// on either side, so the caller must keep `f_hi g_lo` inside the grid band.
///
/// The frequencies of `g_lo` must be at most a quarter of those of `f_hi`.
pub fn taylor_truncation<T: Real>(
    f_hi: &ComplexField<T>,
    g_lo: &ComplexField<T>,
    s: T,
    order: usize,
) -> Result<Truncation<T>, CommutatorError> {
    check_order(s)?;
    if order > ALPHA_CAP {
        return Err(CommutatorError::Parameter(format!(
            "order {order} exceeds the cap {ALPHA_CAP}"
        )));
    }
    let grid: &Grid<T> = f_hi.grid();
    let zeta_min = occupied_radii(f_hi).into_iter().fold(T::infinity(), T::min);
    let eta_max = occupied_radii(g_lo).into_iter().fold(T::zero(), T::max);
    if !(zeta_min > T::zero()) {
        return Err(CommutatorError::Precondition(
            "f_hi must have no zero-frequency content".into(),
        ));
    }
    let separation = eta_max / zeta_min;
    if separation > T::lit(0.25) {
        return Err(CommutatorError::Precondition(format!(
            "low frequencies reach {:.3} of the high ones, at most 1/4 allowed",
            separation.to_f64_lossy()
        )));
    }
    let exact = super::h_tilde_with(f_hi, g_lo, s, Dealias::Off)?;
    let f = f_hi.to_physical();
    let n = grid.dim();
    let mut approx = ComplexField::zeros(grid, crate::spectral::Representation::Physical);
    for m in 1..=order {
        for alpha in MultiIndex::all_of_order(n, m) {
            let g_alpha = apply_symbol(g_lo, |eta| Complex::new(alpha.monomial(&eta[..n]), T::zero()))?.into_physical();
            let prod = f.mul_pointwise(&g_alpha);
            let fact = T::from_u64(alpha.factorial()).expect("small factorial");
            let failure = std::cell::RefCell::new(None);
            let term = apply_symbol(&prod, |xi| {
                if xi.iter().all(|&x| x == T::zero()) {
                    return Complex::new(T::zero(), T::zero());
                }
                match d_alpha_h0(&xi[..n], &alpha, s) {
                    Ok(d) => Complex::new(-d / fact, T::zero()),
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        Complex::new(T::nan(), T::zero())
                    }
                }
            });
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            approx = &approx + &term?.into_physical();
        }
    }
    let scale = exact.norm_l2();
    let error = if scale == T::zero() {
        if approx.norm_l2() == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else if order == 0 {
        T::one()
    } else {
        (&approx - &exact).norm_l2() / scale
    };
    Ok(Truncation {
        approx,
        error,
        separation,
    })
}

/// `a_m = sum_{k=0}^{floor(m/2)} |C^k_{s,m}| |P_k|`.
pub fn a_m(s: f64, m: usize) -> Result<f64, CommutatorError> {
    if m == 0 {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for k in 0..=m / 2 {
        total += taylor_coefficient_c(s, m, k)?.abs() * pairing_count(m, k)? as f64;
    }
    Ok(total)
}

/// Partial sums of `sum_m a_m n^m / m! 2^{-10 n m}` and their increment
/// ratios against `n 2^{1 - 10 n} e`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SeriesCheck {
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// `t_{m+1} / t_m` for `m >= 1`; `None` once the increments vanish.
    pub ratios: Vec<Option<f64>>,
    pub bound: f64,
    pub pass: bool,
}

pub fn series_check(s: f64, n: usize, m_max: usize) -> Result<SeriesCheck, CommutatorError> {
    check_order(s)?;
    let nf = n as f64;
    let damp = 2f64.powf(-10.0 * nf);
    let mut increments = Vec::with_capacity(m_max + 1);
    let mut fact = 1.0;
    for m in 0..=m_max {
        if m > 0 {
            fact *= m as f64;
        }
        increments.push(a_m(s, m)? * nf.powi(m as i32) / fact * damp.powi(m as i32));
    }
    let partial_sums = increments
        .iter()
        .scan(0.0, |acc, &t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let ratios: Vec<Option<f64>> = (1..m_max)
        .map(|m| (increments[m] > 0.0).then(|| increments[m + 1] / increments[m]))
        .collect();
    let bound = nf * 2f64.powf(1.0 - 10.0 * nf) * std::f64::consts::E;
    let pass = ratios.iter().all(|r| r.is_none_or(|r| r <= bound));
    Ok(SeriesCheck {
        increments,
        partial_sums,
        ratios,
        bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn coefficient_examples() {
        assert_eq!(taylor_coefficient_c(0.75, 1, 0).unwrap(), 1.5);
        assert_eq!(taylor_coefficient_c(0.75, 2, 0).unwrap(), -0.75);
        assert!(taylor_coefficient_c(0.75, 2, 2).is_err());
        assert!(taylor_coefficient_c(0.75, 0, 0).is_err());
        let s = Rational64::new(3, 4);
        assert_eq!(taylor_coefficient_c(s, 3, 0).unwrap(), Rational64::new(15, 8));
        assert_eq!(taylor_coefficient_c(s, 3, 1).unwrap(), Rational64::new(-3, 4));
    }

    #[test]
    fn coefficient_growth_bound() {
        for s in [0.55, 0.75, 0.95] {
            for m in 1..=10 {
                for k in 0..=m / 2 {
                    let c: f64 = taylor_coefficient_c(s, m, k).unwrap();
                    let f: f64 = (1..=(m - k) as u64).product::<u64>() as f64;
                    assert!(c.abs() <= 2f64.powi((m - k) as i32) * f);
                }
            }
        }
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pairing_count(2, 1).unwrap(), 1);
        assert_eq!(pairing_count(4, 2).unwrap(), 3);
        assert_eq!(pairing_count(6, 2).unwrap(), 45);
        assert_eq!(pairing_count(20, 10).unwrap(), 654_729_075);
        assert!(matches!(pairing_count(21, 1), Err(CommutatorError::Range { .. })));
        assert!(pairing_count(3, 2).is_err());
        let fam = enumerate_pairings(4, 2).unwrap();
        assert_eq!(
            fam.pairings,
            vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]]
        );
        assert_eq!(fam.unpaired(0), Vec::<usize>::new());
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::all_of_order(3, 2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].as_slice(), &[2, 0, 0]);
        assert_eq!(MultiIndex::new(&[1, 2, 1]).unwrap().slots(), vec![0, 1, 1, 2]);
        assert_eq!(MultiIndex::new(&[2, 3]).unwrap().factorial(), 12);
        assert!(MultiIndex::new(&[4, 3]).is_err());
    }

    #[test]
    fn first_derivative_example() {
        let a = MultiIndex::new(&[1, 0, 0]).unwrap();
        let d = d_alpha_h0(&[2.0, 0.0, 0.0], &a, 0.75).unwrap();
        assert!((d + 1.5 * 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            d_alpha_h0(&[0.0, 0.0, 0.0], &a, 0.75),
            Err(CommutatorError::Singular)
        ));
    }

    #[test]
    fn quadratic_case() {
        let xi = [0.3f64, -1.2, 2.0];
        let mixed = MultiIndex::new(&[1, 1, 0]).unwrap();
        assert!(d_alpha_h0(&xi, &mixed, 1.0).unwrap().abs() < 1e-14);
        let diag = MultiIndex::new(&[0, 2, 0]).unwrap();
        assert!((d_alpha_h0(&xi, &diag, 1.0).unwrap() - 2.0).abs() < 1e-14);
        for alpha in MultiIndex::all_of_order(3, 3) {
            assert!(d_alpha_h0(&xi, &alpha, 1.0).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn series_bound_holds() {
        for s in [0.6, 0.75, 0.9, 1.0] {
            for n in 1..=3 {
                let check = series_check(s, n, 12).unwrap();
                assert!(check.pass, "s={s} n={n}: {check:?}");
            }
        }
    }
}
