//! The static suites: identities, Taylor machinery, dispersion multiplier
//! and the dyadic partition.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Bound, ExperimentReport, LabConfig, LabError, ReportBuilder, Thresholds};
use crate::commutator::{
    d_alpha_h0, enumerate_pairings, fd_d_alpha_h0, pairing_count, series_check, taylor_truncation, MultiIndex,
};
use crate::dispersion::{l_magnitude_check, multiplier_report, sample_admissible};
use crate::littlewood_paley::{delta_k, ConePartition, CutoffFamily, PhiConvention};
use crate::spectral::{relative_l2, ComplexField, Grid};
use crate::stereographic::verify_frame_identities;

/// Samples and radius of the identity suite.
const IDENTITY_SAMPLES: usize = 10_000;
const IDENTITY_RADIUS: f64 = 10.0;
const TAYLOR_SAMPLES: usize = 100;
const MULTIPLIER_SAMPLES: usize = 10_000;
const MULTIPLIER_ORDERS: [f64; 3] = [0.6, 0.75, 0.9];
/// `(k, k')` pairs: both ends of the `k'` range and interior points.
const MULTIPLIER_PAIRS: [(u32, u32); 7] = [(10, 8), (15, 12), (15, 14), (15, 16), (20, 16), (30, 24), (30, 31)];

pub fn exp_identities(cfg: &LabConfig, th: &Thresholds) -> ExperimentReport {
    let mut b = ReportBuilder::new("identities", cfg);
    let t0 = Instant::now();
    let rep = verify_frame_identities(IDENTITY_SAMPLES, cfg.seed, IDENTITY_RADIUS);
    let elapsed = t0.elapsed().as_secs_f64();
    let bound = Bound::AtMost {
        value: th.get("identities.max_residual"),
    };
    for (i, r) in rep.max_residual.iter().enumerate() {
        b.check(&format!("identity_{}_max_residual", i + 1), *r, bound);
    }
    b.check(
        "runtime_s",
        elapsed,
        Bound::AtMost {
            value: th.get("identities.runtime_s"),
        },
    );
    b.note(format!("worst sample z = {} + {}i", rep.worst_z[0], rep.worst_z[1]));
    b.finish()
}

fn random_taylor_case(rng: &mut ChaCha8Rng) -> (Vec<f64>, MultiIndex) {
    let dim = rng.random_range(1..=3usize);
    let xi: Vec<f64> = loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() >= 0.25 {
            break v;
        }
    };
    let order = rng.random_range(1..=4usize);
    let mut alpha = vec![0usize; dim];
    for _ in 0..order {
        alpha[rng.random_range(0..dim)] += 1;
    }
    (xi, MultiIndex::new(&alpha).expect("small multi-index"))
}

/// Largest relative gap between `d_alpha_h0` and its finite-difference
/// oracle, scaled by `max(|oracle|, |xi|^{2s - |alpha|})`.
pub(crate) fn taylor_fd_gap(s: f64, samples: usize, seed: u64) -> Result<f64, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<_> = (0..samples).map(|_| random_taylor_case(&mut rng)).collect();
    let gaps: Vec<f64> = cases
        .par_iter()
        .map(|(xi, alpha)| -> Result<f64, LabError> {
            let exact = d_alpha_h0(xi, alpha, s)?;
            let fd = fd_d_alpha_h0(xi, alpha, s)?;
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = fd.abs().max(r.powf(2.0 * s - alpha.order() as f64));
            Ok((exact - fd).abs() / scale)
        })
        .collect::<Result<_, _>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Largest geometric decay rate of the truncation error over the orders
/// `1..=6`, divided by the separation `|eta| / |xi|`, on single-mode pairs.
/// The rate is fitted by least squares to `log e_M`, since single steps are
/// not monotone when `eta` is oblique to `xi`.
pub(crate) fn taylor_decay(s: f64) -> Result<f64, LabError> {
    let cases: [(usize, [i32; 3], [i32; 3]); 4] = [
        (1, [8, 0, 0], [1, 0, 0]),
        (1, [12, 0, 0], [-2, 0, 0]),
        (2, [8, 4, 0], [1, -1, 0]),
        (3, [6, 0, 4], [0, 1, 0]),
    ];
    let mut worst = 0.0f64;
    for (dim, hi, lo) in cases {
        let g = Grid::<f64>::new(dim, 32)?;
        let f = ComplexField::plane_wave(&g, hi, Complex::new(1.0, 0.0));
        let h = ComplexField::plane_wave(&g, lo, Complex::new(0.5, -0.2));
        let mut errors = Vec::new();
        let mut separation = 0.0;
        for order in 1..=6 {
            let t = taylor_truncation(&f, &h, s, order)?;
            separation = t.separation;
            if t.error > 1e-13 {
                errors.push(t.error);
            }
        }
        let orders: Vec<f64> = (1..=errors.len()).map(|m| m as f64).collect();
        let logs: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let rate = super::experiments::slope(&orders, &logs).exp();
        worst = worst.max(rate / separation);
    }
    Ok(worst)
}

/// Mismatches between `pairing_count` and explicit enumeration for `m <= 10`.
pub(crate) fn pairing_mismatches() -> Result<usize, LabError> {
    let mut bad = 0;
    for m in 0..=10 {
        for k in 0..=m / 2 {
            if pairing_count(m, k)? != enumerate_pairings(m, k)?.len() as u128 {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

pub fn exp_taylor(cfg: &LabConfig, th: &Thresholds) -> Result<ExperimentReport, LabError> {
    let mut b = ReportBuilder::new("taylor", cfg);
    let gap = taylor_fd_gap(cfg.s, TAYLOR_SAMPLES, cfg.seed)?;
    b.check(
        "fd_max_rel_error",
        gap,
        Bound::AtMost {
            value: th.get("taylor.fd_rel_error"),
        },
    );
    b.check(
        "pairing_mismatches",
        pairing_mismatches()? as f64,
        Bound::AtMost { value: 0.0 },
    );
    let decay = taylor_decay(cfg.s)?;
    b.check(
        "decay_ratio_over_separation",
        decay,
        Bound::AtMost {
            value: th.get("taylor.decay_factor"),
        },
    );
    let mut series_failures = 0;
    let mut worst_ratio = 0.0f64;
    for s in [0.6, 0.75, 0.9, 1.0] {
        for n in 1..=3 {
            let rep = series_check(s, n, 20)?;
            if !rep.pass {
                series_failures += 1;
            }
            for r in rep.ratios.iter().flatten() {
                worst_ratio = worst_ratio.max(r / rep.bound);
            }
        }
    }
    b.check(
        "series_bound_failures",
        series_failures as f64,
        Bound::AtMost { value: 0.0 },
    );
    b.log("series_worst_ratio_over_bound", worst_ratio);
    Ok(b.finish())
}

pub fn exp_multiplier(cfg: &LabConfig, th: &Thresholds) -> Result<ExperimentReport, LabError> {
    let mut b = ReportBuilder::new("multiplier", cfg);
    let (mut res, mut frac) = (0.0f64, 1.0f64);
    let (mut rlo, mut rhi) = (f64::INFINITY, 0.0f64);
    let (mut llo, mut lhi) = (f64::INFINITY, 0.0f64);
    let mut samples = 0;
    for (i, s) in MULTIPLIER_ORDERS.iter().enumerate() {
        for (j, (k, kp)) in MULTIPLIER_PAIRS.iter().enumerate() {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((i * 100 + j) as u64);
            let pts = sample_admissible(*k, *kp, *s, MULTIPLIER_SAMPLES, seed)?;
            let rep = multiplier_report(*k, *kp, *s, &pts);
            let lrep = l_magnitude_check(&pts, *s);
            samples += rep.samples;
            res = res.max(rep.residual_max);
            frac = frac.min(rep.n_range_fraction);
            rlo = rlo.min(rep.ratio_min);
            rhi = rhi.max(rep.ratio_max);
            llo = llo.min(lrep.ratio_min);
            lhi = lhi.max(lrep.ratio_max);
        }
    }
    b.log("samples", samples as f64);
    b.check(
        "factorization_residual_max",
        res,
        Bound::AtMost {
            value: th.get("multiplier.residual"),
        },
    );
    b.check(
        "n_range_fraction_min",
        frac,
        Bound::AtLeast {
            value: th.get("multiplier.n_range_fraction"),
        },
    );
    let ratio = Bound::Within {
        lo: th.get("multiplier.ratio_lo"),
        hi: th.get("multiplier.ratio_hi"),
    };
    b.check("comparability_ratio_min", rlo, ratio);
    b.check("comparability_ratio_max", rhi, ratio);
    let lb = Bound::Within {
        lo: th.get("multiplier.l_ratio_lo"),
        hi: th.get("multiplier.l_ratio_hi"),
    };
    b.check("l_ratio_min", llo, lb);
    b.check("l_ratio_max", lhi, lb);
    Ok(b.finish())
}

/// `max |sum_k phi_k(|xi|) - 1|` over every frequency of the grid.
pub(crate) fn partition_defect(grid: &Grid<f64>, convention: PhiConvention) -> f64 {
    let fam = CutoffFamily::with_convention(grid, convention);
    grid.xi_norms_sq()
        .par_iter()
        .map(|&r2| {
            let r = r2.sqrt();
            let total: f64 = (0..=fam.k_max()).map(|k| fam.phi_k(k, r)).sum();
            (total - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Worst error of `Delta_k` on plane waves at `|m| = 2^k`, and worst leakage
/// into other blocks.
pub(crate) fn block_reproduction(grid: &Grid<f64>) -> Result<f64, LabError> {
    let fam = CutoffFamily::new(grid);
    let mut worst = 0.0f64;
    let top = (grid.n() / 2).trailing_zeros() as usize;
    for k in 0..top {
        for axis in 0..grid.dim() {
            let mut m = [0i32; 3];
            m[axis] = 1 << k;
            let f = ComplexField::plane_wave(grid, m, Complex::new(0.6, 0.8));
            for j in 0..=fam.k_max() {
                let d = delta_k(&f, j, &fam)?;
                let err = if j == k { relative_l2(&d, &f) } else { d.norm_l2() };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

pub fn exp_partition(cfg: &LabConfig, th: &Thresholds) -> Result<ExperimentReport, LabError> {
    let mut b = ReportBuilder::new("partition", cfg);
    let mut defect = 0.0f64;
    let mut literal = 0.0f64;
    let mut block = 0.0f64;
    let mut covering = 1.0f64;
    for (dim, n) in [(1, 64), (2, 64), (3, 32)] {
        let g = Grid::<f64>::new(dim, n)?;
        defect = defect.max(partition_defect(&g, PhiConvention::Telescoping));
        literal = literal.max(partition_defect(&g, PhiConvention::Literal));
        block = block.max(block_reproduction(&g)?);
        covering = covering.min(ConePartition::new(&g)?.covering_cosine());
    }
    b.check(
        "partition_defect",
        defect,
        Bound::AtMost {
            value: th.get("partition.defect"),
        },
    );
    b.check(
        "block_reproduction_error",
        block,
        Bound::AtMost {
            value: th.get("partition.block_error"),
        },
    );
    b.check(
        "negative_control_defect",
        literal,
        Bound::AtLeast {
            value: th.get("partition.negative_control_defect"),
        },
    );
    b.log("cone_covering_cosine", covering);
    b.note("negative control: the literal cutoff phi0(r) - phi0(r/2) is expected to fail the partition check");
    Ok(b.finish())
}

/// All static suites at the configured seed, plus a sweep over
/// `seed_sweep` consecutive seeds of the randomized parts.
pub fn exp_static_suites(cfg: &LabConfig, th: &Thresholds) -> Result<ExperimentReport, LabError> {
    let started = Instant::now();
    let parts = vec![
        exp_identities(cfg, th),
        exp_taylor(cfg, th)?,
        exp_multiplier(cfg, th)?,
        exp_partition(cfg, th)?,
    ];
    let mut sweep_failures = 0usize;
    for i in 1..cfg.seed_sweep {
        let c = LabConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        let id = exp_identities(&c, th);
        if id
            .metrics
            .iter()
            .any(|m| m.name != "runtime_s" && m.pass == Some(false))
        {
            sweep_failures += 1;
        }
        if taylor_fd_gap(c.s, TAYLOR_SAMPLES, c.seed)? > th.get("taylor.fd_rel_error") {
            sweep_failures += 1;
        }
        if !exp_multiplier(&c, th)?.pass {
            sweep_failures += 1;
        }
    }
    let mut report = ExperimentReport::aggregate("static_suites", cfg, parts, started);
    let pass = sweep_failures == 0;
    report.metrics.push(super::Metric {
        name: "seed_sweep_failures".into(),
        value: sweep_failures as f64,
        bound: Some(Bound::AtMost { value: 0.0 }),
        pass: Some(pass),
    });
    report.pass &= pass;
    Ok(report)
}
