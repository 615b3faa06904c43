use proptest::prelude::*;
use smap::dispersion::{big_k, big_n, factorization, factorization_residual, sample_admissible, AdmissiblePoint};

#[test]
fn n_is_outside_its_domain_for_nonnegative_tau() {
    assert!(big_n(1.0, 0.5, 0.75).is_err());
    assert!(big_n(4.0, -1.0, 0.75).is_err());
    assert!(big_n(1.0, -1.0, 1.5).is_err());
    assert!(AdmissiblePoint::new(0, 0, 1.0, 0.0, 0.0, 0.75).is_err());
}

#[test]
fn sampled_points_factorize() {
    for s in [0.6, 0.75, 0.9] {
        let points = sample_admissible(15, 12, s, 2000, 3).unwrap();
        assert_eq!(points.len(), 2000);
        for p in &points {
            assert!(factorization_residual(p, s) <= 1e-10);
        }
    }
}

#[test]
fn sampling_is_deterministic() {
    let a = sample_admissible(10, 8, 0.75, 1500, 9).unwrap();
    let b = sample_admissible(10, 8, 0.75, 1500, 9).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn n_solves_the_characteristic_equation(p in 0.0f64..100.0, extra in 0.01f64..50.0, s in 0.3f64..1.0) {
        let tau = -(p + extra).powf(s);
        let n = big_n(p, tau, s).unwrap();
        prop_assert!(n >= 0.0);
        let lhs = (n * n + p).powf(s);
        prop_assert!((lhs + tau).abs() <= 1e-12 * tau.abs());
    }

    #[test]
    fn k_is_the_slope_of_the_symbol_at_n(p in 0.0f64..10.0, extra in 0.5f64..10.0, s in 0.3f64..1.0) {
        let tau = -(p + extra).powf(s);
        let n = big_n(p, tau, s).unwrap();
        let symbol = |x: f64| (x * x + p).powf(s);
        let h = 1e-4 * n;
        let fd = (symbol(n + h) - symbol(n - h)) / (2.0 * h);
        let k = big_k(p, tau, s).unwrap();
        prop_assert!((k - fd).abs() <= 1e-6 * k.abs());
    }

    #[test]
    fn l_matches_the_direct_quotient_away_from_the_root(
        xi1 in 1.0f64..20.0,
        p in 0.0f64..50.0,
        frac in -0.5f64..0.5,
        s in 0.55f64..0.95,
    ) {
        let a = (xi1 * xi1 + p).powf(s);
        let point = AdmissiblePoint { k: 1, k_prime: 1, xi1, xi_perp_sq: p, mu: frac * a };
        let n = big_n(p, point.tau(s), s);
        prop_assume!(frac.abs() > 1e-3 && n.is_ok());
        let n = n.unwrap();
        let f = factorization(&point, s);
        prop_assert!((f.n - n).abs() <= 1e-12 * n.max(1.0));
        let direct = (point.mu - f.k * f.h) / f.h;
        prop_assert!((f.l - direct).abs() <= 1e-8 * (f.l.abs() + f.k.abs()));
    }
}
