//! Space-time modulation projections `Q_j` and the `X_k` norm.
//!
//! A [`Trajectory`] is a uniformly sampled window of frames. Before the
//! temporal transform every frame is multiplied by a smooth taper equal to 1
//! on the middle half of the window and vanishing at its ends; the sampled
//! window is then treated as one period, so the dual variable `tau` lives on
//! the lattice `2 pi l / (count * dt)`.

use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use super::{smoothstep, CutoffFamily, LpError};
use crate::scalar::{c, Real};
use crate::spectral::{ComplexField, Grid, Representation};

/// Uniformly time-sampled frames with the taper applied before any
/// temporal transform.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    grid: Grid<T>,
    times: Vec<T>,
    frames: Vec<ComplexField<T>>,
    taper: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    /// Frames at `times` with the default window taper.
    pub fn new(grid: &Grid<T>, times: Vec<T>, frames: Vec<ComplexField<T>>) -> Result<Self, LpError> {
        let taper = window_taper(&times);
        Self::with_taper(grid, times, frames, taper)
    }

    pub fn with_taper(
        grid: &Grid<T>,
        times: Vec<T>,
        frames: Vec<ComplexField<T>>,
        taper: Vec<T>,
    ) -> Result<Self, LpError> {
        let count = times.len();
        if count < 2 || !count.is_power_of_two() {
            return Err(LpError::Trajectory(format!(
                "sample count must be a power of two >= 2, got {count}"
            )));
        }
        if frames.len() != count || taper.len() != count {
            return Err(LpError::Trajectory(format!(
                "{count} times but {} frames and {} taper weights",
                frames.len(),
                taper.len()
            )));
        }
        let dt = times[1] - times[0];
        if !(dt > T::zero()) {
            return Err(LpError::Trajectory("times must increase".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > c::<T>(1e-9) * dt {
                return Err(LpError::Trajectory("times are not uniformly spaced".into()));
            }
        }
        if frames.iter().any(|f| f.grid() != grid) {
            return Err(LpError::Trajectory("frame grid differs from trajectory grid".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            times,
            frames,
            taper,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn frames(&self) -> &[ComplexField<T>] {
        &self.frames
    }

    pub fn taper(&self) -> &[T] {
        &self.taper
    }

    pub fn dt(&self) -> T {
        self.times[1] - self.times[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Copy with every frame multiplied by its taper weight, taper reset to 1.
    pub fn tapered(&self) -> Self {
        let frames = self
            .frames
            .iter()
            .zip(&self.taper)
            .map(|(f, &w)| f.scale(Complex::new(w, T::zero())))
            .collect();
        Self {
            grid: self.grid.clone(),
            times: self.times.clone(),
            frames,
            taper: vec![T::one(); self.times.len()],
        }
    }

    /// `(dt * sum_t ||frame_t||^2)^{1/2}`.
    pub fn norm_l2(&self) -> T {
        let sum = self.frames.iter().fold(T::zero(), |acc, f| acc + f.norm_l2().powi(2));
        (sum * self.dt()).sqrt()
    }

    /// Nyquist temporal frequency `pi / dt`.
    pub fn tau_nyquist(&self) -> T {
        T::PI() / self.dt()
    }

    /// Largest modulation index whose block is resolved by the sampling.
    pub fn j_max(&self, s: T) -> usize {
        j_top(self.tau_nyquist(), max_symbol(&self.grid, s))
    }
}

fn max_symbol<T: Real>(grid: &Grid<T>, s: T) -> T {
    grid.xi_norms_sq().iter().fold(T::zero(), |a, &k2| {
        a.max(if k2 == T::zero() { T::zero() } else { k2.powf(s) })
    })
}

fn j_top<T: Real>(tau_nyquist: T, sym_max: T) -> usize {
    let top = (tau_nyquist + sym_max).to_f64_lossy();
    top.log2().ceil().max(1.0) as usize
}

/// 1 on the middle half of the sampled window, 0 at both ends.
pub fn window_taper<T: Real>(times: &[T]) -> Vec<T> {
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Vec::new();
    };
    let centre = (first + last) * c(0.5);
    let quarter = (last - first) * c(0.25);
    times
        .iter()
        .map(|&t| smoothstep(((t - centre).abs() - quarter) / quarter))
        .collect()
}

/// Tapered space-time coefficients, layout `[mode][tau index]`.
struct SpaceTime<T: Real> {
    coeffs: Vec<Complex<T>>,
    count: usize,
    tau: Vec<T>,
}

fn space_time<T: Real>(tr: &Trajectory<T>) -> SpaceTime<T> {
    let count = tr.len();
    let modes = tr.grid.len();
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); modes * count];
    for (t, (frame, &w)) in tr.frames.iter().zip(&tr.taper).enumerate() {
        let fh = frame.to_spectral();
        for (idx, v) in fh.values().iter().enumerate() {
            coeffs[idx * count + t] = *v * w;
        }
    }
    let fft = FftPlanner::new().plan_fft(count, FftDirection::Forward);
    fft.process(&mut coeffs);
    let norm = T::one() / T::from_usize_lossy(count);
    for v in coeffs.iter_mut() {
        *v *= norm;
    }
    let period = T::from_usize_lossy(count) * tr.dt();
    let tau = (0..count)
        .map(|l| {
            let l = if l < count / 2 {
                l as i64
            } else {
                l as i64 - count as i64
            };
            (T::PI() + T::PI()) * T::from_i64(l).unwrap() / period
        })
        .collect();
    SpaceTime { coeffs, count, tau }
}

fn check_resolved<T: Real>(tr: &Trajectory<T>, j: usize, s: T) -> Result<(), LpError> {
    if j <= tr.j_max(s) {
        return Ok(());
    }
    let period = T::from_usize_lossy(tr.len()) * tr.dt();
    let sym = max_symbol(&tr.grid, s);
    let mut count = tr.len();
    while j_top(T::PI() * T::from_usize_lossy(count) / period, sym) < j {
        count *= 2;
    }
    Err(LpError::Resolution {
        j,
        required_samples: count,
    })
}

/// `Q_j` applied to the tapered trajectory: space-time multiplication by
/// `phi_j(tau + |xi|^{2s})`. The result carries a unit taper.
pub fn modulation_project<T: Real>(
    tr: &Trajectory<T>,
    j: usize,
    s: T,
    family: &CutoffFamily,
) -> Result<Trajectory<T>, LpError> {
    crate::spectral::check_order(s)?;
    check_resolved(tr, j, s)?;
    let mut st = space_time(tr);
    let sym = tr.grid.fractional_symbol(s);
    let count = st.count;
    for (idx, &m) in sym.iter().enumerate() {
        for l in 0..count {
            let w = family.phi_k(j, st.tau[l] + m);
            st.coeffs[idx * count + l] *= w;
        }
    }
    let ifft = FftPlanner::new().plan_fft(count, FftDirection::Inverse);
    ifft.process(&mut st.coeffs);
    let frames = (0..count)
        .map(|t| {
            let values = (0..tr.grid.len()).map(|idx| st.coeffs[idx * count + t]).collect();
            ComplexField::from_values(&tr.grid, values, Representation::Spectral)
                .expect("sizes agree")
                .into_physical()
        })
        .collect();
    Ok(Trajectory {
        grid: tr.grid.clone(),
        times: tr.times.clone(),
        frames,
        taper: vec![T::one(); count],
    })
}

/// Value of the `X_k` norm and its per-block breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct XkNorm<T> {
    pub value: T,
    /// `||Q_j tr||` for `j = 0..=j_max`.
    pub block_norms: Vec<T>,
    /// Mass of the tapered trajectory not covered by the resolved blocks.
    pub residual: T,
}

/// `sum_j 2^{j/2} ||Q_j tr||_{L2(space, time)}` over the resolved `j`.
///
/// Every frame must already be localized to dyadic block `k`.
pub fn xk_norm<T: Real>(tr: &Trajectory<T>, k: usize, s: T, family: &CutoffFamily) -> Result<XkNorm<T>, LpError> {
    crate::spectral::check_order(s)?;
    if k > family.k_max() {
        return Err(LpError::BlockOutOfRange {
            k,
            k_max: family.k_max(),
        });
    }
    let tol = c::<T>(1e-10);
    for (t, frame) in tr.frames.iter().enumerate() {
        let fh = frame.to_spectral();
        let mut outside = T::zero();
        let mut total = T::zero();
        for (idx, v) in fh.values().iter().enumerate() {
            let w = T::one() - family.phi_k(k, tr.grid.xi_norm_sq(idx).sqrt());
            outside += w * w * v.norm_sqr();
            total += v.norm_sqr();
        }
        if outside.sqrt() > tol * total.sqrt() + T::min_positive_value() {
            return Err(LpError::Precondition(format!(
                "frame {t} is not localized to block {k}"
            )));
        }
    }
    let st = space_time(tr);
    let sym = tr.grid.fractional_symbol(s);
    let j_max = tr.j_max(s);
    let count = st.count;
    let scale = tr.dt() * T::from_usize_lossy(count);
    let mut sums = vec![T::zero(); j_max + 1];
    let mut uncovered = T::zero();
    for (idx, &m) in sym.iter().enumerate() {
        for l in 0..count {
            let p = st.coeffs[idx * count + l].norm_sqr();
            if p == T::zero() {
                continue;
            }
            let x = st.tau[l] + m;
            let mut covered = T::zero();
            for (j, sum) in sums.iter_mut().enumerate() {
                let w = family.phi_k(j, x);
                covered += w;
                *sum += w * w * p;
            }
            let rest = T::one() - covered;
            uncovered += rest * rest * p;
        }
    }
    let block_norms: Vec<T> = sums.into_iter().map(|v| (v * scale).sqrt()).collect();
    let two = T::one() + T::one();
    let value = block_norms.iter().enumerate().fold(T::zero(), |acc, (j, &b)| {
        acc + two.powf(T::from_usize_lossy(j) * c(0.5)) * b
    });
    Ok(XkNorm {
        value,
        block_norms,
        residual: (uncovered * scale).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::relative_l2;

    /// Frames of `e^{i(m.x + omega t)}` on `count` samples over `[-t_half, t_half)`.
    fn wave(grid: &Grid<f64>, m: [i32; 3], omega: f64, count: usize, t_half: f64) -> Trajectory<f64> {
        let dt = 2.0 * t_half / count as f64;
        let times: Vec<f64> = (0..count).map(|i| -t_half + i as f64 * dt).collect();
        let base = ComplexField::plane_wave(grid, m, Complex::new(1.0, 0.0));
        let frames = times
            .iter()
            .map(|&t| base.scale(Complex::new((omega * t).cos(), (omega * t).sin())))
            .collect();
        Trajectory::new(grid, times, frames).unwrap()
    }

    fn setup() -> (Grid<f64>, CutoffFamily) {
        let g = Grid::new(1, 16).unwrap();
        let fam = CutoffFamily::with_k_max(20, crate::littlewood_paley::PhiConvention::Telescoping);
        (g, fam)
    }

    #[test]
    fn taper_shape() {
        let times: Vec<f64> = (0..65).map(|i| -1.0 + i as f64 / 32.0).collect();
        let w = window_taper(&times);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[64], 0.0);
        assert_eq!(w[32], 1.0);
        assert_eq!(w[16], 1.0);
        assert_eq!(w[48], 1.0);
    }

    #[test]
    fn free_wave_has_zero_modulation() {
        let (g, fam) = setup();
        let s = 0.75;
        let omega = -(4f64).powf(s); // |xi| = 2
        let tr = wave(&g, [2, 0, 0], omega, 1024, 32.0);
        let tapered = tr.tapered();
        let q0 = modulation_project(&tr, 0, s, &fam).unwrap();
        assert!(relative_l2(&q0.frames()[512], &tapered.frames()[512]) < 1e-3);
        let total = tapered.norm_l2();
        for j in 1..=tr.j_max(s) {
            let qj = modulation_project(&tr, j, s, &fam).unwrap();
            assert!(qj.norm_l2() <= 1e-3 * total, "j={j}: {}", qj.norm_l2() / total);
        }
    }

    #[test]
    fn modulated_wave_sits_in_its_block() {
        let (g, fam) = setup();
        let s = 0.6;
        let xi2s = 4f64.powf(2.0 * s);
        let j = 3;
        // tau = 2^j - |xi|^{2s}
        let tr = wave(&g, [4, 0, 0], 8.0 - xi2s, 1024, 32.0);
        let total = tr.tapered().norm_l2();
        let qj = modulation_project(&tr, j, s, &fam).unwrap();
        assert!((qj.norm_l2() / total - 1.0).abs() < 1e-3);
        let xk = xk_norm(&tr, 2, s, &fam).unwrap();
        assert!((xk.value / (8f64.sqrt() * total) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn blocks_sum_to_the_tapered_trajectory() {
        let g = Grid::<f64>::new(2, 8).unwrap();
        let fam = CutoffFamily::with_k_max(20, crate::littlewood_paley::PhiConvention::Telescoping);
        let s = 0.75;
        let f0 = crate::datagen::random_field(&g, 2.0, 1.0, 3);
        let times: Vec<f64> = (0..64).map(|i| -2.0 + i as f64 / 16.0).collect();
        let frames = times
            .iter()
            .map(|&t| f0.scale(Complex::new(t.cos(), (2.0 * t).sin())))
            .collect();
        let tr = Trajectory::new(&g, times, frames).unwrap();
        let tapered = tr.tapered();
        let mut acc: Vec<ComplexField<f64>> = tapered
            .frames()
            .iter()
            .map(|_| ComplexField::zeros(&g, Representation::Physical))
            .collect();
        for j in 0..=tr.j_max(s) {
            let q = modulation_project(&tr, j, s, &fam).unwrap();
            for (a, f) in acc.iter_mut().zip(q.frames()) {
                *a = &*a + f;
            }
        }
        for (a, f) in acc.iter().zip(tapered.frames()) {
            let err = (a - f).norm_l2();
            assert!(err <= 1e-10 * tapered.norm_l2().max(1.0), "{err}");
        }
        let xk = xk_norm(&tr, 2, s, &fam);
        assert!(matches!(xk, Err(LpError::Precondition(_))));
    }

    #[test]
    fn unresolved_block_reports_required_samples() {
        let (g, fam) = setup();
        let tr = wave(&g, [1, 0, 0], -1.0, 16, 2.0);
        let top = tr.j_max(0.5);
        match modulation_project(&tr, top + 3, 0.5, &fam) {
            Err(LpError::Resolution { j, required_samples }) => {
                assert_eq!(j, top + 3);
                assert!(required_samples > 16);
                let dt = 4.0 / required_samples as f64;
                let nyq = std::f64::consts::PI / dt;
                assert!(j_top(nyq, 1.0) >= j);
            }
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn two_modulation_mixture_adds_up() {
        let (g, fam) = setup();
        let s = 0.75;
        let count = 2048;
        let t_half = 64.0;
        let dt = 2.0 * t_half / count as f64;
        let times: Vec<f64> = (0..count).map(|i| -t_half + i as f64 * dt).collect();
        let xi2s = 2f64.powf(2.0 * s);
        let a = ComplexField::plane_wave(&g, [2, 0, 0], Complex::new(1.0, 0.0));
        let (w1, w2) = (2.0 - xi2s, 16.0 - xi2s);
        let frames: Vec<_> = times
            .iter()
            .map(|&t| {
                let p =
                    Complex::new((w1 * t).cos(), (w1 * t).sin()) + Complex::new((w2 * t).cos(), (w2 * t).sin()) * 0.5;
                a.scale(p)
            })
            .collect();
        let tr = Trajectory::new(&g, times.clone(), frames).unwrap();
        let single = |w: f64, amp: f64| {
            let frames = times
                .iter()
                .map(|&t| a.scale(Complex::new((w * t).cos(), (w * t).sin()) * amp))
                .collect();
            Trajectory::new(&g, times.clone(), frames).unwrap()
        };
        let x = xk_norm(&tr, 1, s, &fam).unwrap().value;
        let x1 = xk_norm(&single(w1, 1.0), 1, s, &fam).unwrap().value;
        let x2 = xk_norm(&single(w2, 0.5), 1, s, &fam).unwrap().value;
        assert!(((x - (x1 + x2)) / (x1 + x2)).abs() < 0.05);
    }
}
