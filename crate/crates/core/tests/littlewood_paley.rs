use num_complex::Complex;
use proptest::prelude::*;
use smap::littlewood_paley::{
    besov_norm, cone_project, delta_k, phi0, ConePartition, CutoffFamily, DyadicProfile, PhiConvention,
};
use smap::spectral::ComplexField;
use smap::Grid;

type C = Complex<f64>;

#[test]
fn base_bump_shape() {
    assert_eq!(phi0(0.0), 1.0);
    assert_eq!(phi0(1.0), 1.0);
    assert_eq!(phi0(2.0), 0.0);
    assert_eq!(phi0(-1.5), phi0(1.5));
    let mut last = 1.0;
    for i in 0..=100 {
        let v = phi0(1.0 + i as f64 / 100.0);
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn block_centered_plane_waves_are_reproduced() {
    let grid = Grid::new(1, 64).unwrap();
    let family = CutoffFamily::new(&grid);
    for k in 0..=4usize {
        let f = ComplexField::plane_wave(&grid, [1 << k, 0, 0], C::new(0.5, -0.25));
        for j in 0..=family.k_max() {
            let d = delta_k(&f, j, &family).unwrap().to_physical();
            let expected = if j == k { f.norm_l2() } else { 0.0 };
            assert!((d.norm_l2() - expected).abs() < 1e-13, "k = {k}, j = {j}");
        }
        let sigma = 2.0;
        let b = besov_norm(&f, sigma, &family).unwrap();
        let expected = 2f64.powf(sigma * k as f64) * f.norm_l2();
        assert!((b - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn literal_cutoffs_do_not_sum_to_one() {
    let family = CutoffFamily::with_k_max(6, PhiConvention::Literal);
    let worst = (0..=640)
        .map(|i| {
            let r = i as f64 * 0.1;
            let sum: f64 = (0..=6).map(|k| family.phi_k(k, r)).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-2);
}

#[test]
fn blocks_telescope_to_the_field() {
    let grid = Grid::new(3, 16).unwrap();
    let family = CutoffFamily::new(&grid);
    let f = smap::datagen::random_field::<f64>(&grid, 6.0, 1.0, 5);
    let mut sum = ComplexField::zeros(&grid, smap::spectral::Representation::Physical);
    for k in 0..=family.k_max() {
        sum = &sum + &delta_k(&f, k, &family).unwrap().to_physical();
    }
    assert!((&sum - &f).norm_l2() < 1e-13);
    assert!(delta_k(&f, family.k_max() + 1, &family).is_err());
}

#[test]
fn cone_projections_sum_to_the_field() {
    for dim in 1..=3 {
        let grid = Grid::new(dim, 16).unwrap();
        let cones = ConePartition::new(&grid).unwrap();
        let f = smap::datagen::random_field::<f64>(&grid, 4.0, 1.0, 11);
        let mut sum = ComplexField::zeros(&grid, smap::spectral::Representation::Physical);
        for e in cones.directions() {
            sum = &sum + &cone_project(&f, e, &cones).unwrap().to_physical();
        }
        assert!((&sum - &f).norm_l2() < 1e-13, "dim {dim}");
    }
}

proptest! {
    #[test]
    fn telescoping_cutoffs_sum_to_one(r in 0.0f64..64.0) {
        let family = CutoffFamily::with_k_max(7, PhiConvention::Telescoping);
        let sum: f64 = (0..=7).map(|k| family.phi_k(k, r)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cutoffs_are_supported_on_their_annulus(k in 1usize..8, r in 0.0f64..600.0) {
        let family = CutoffFamily::with_k_max(8, PhiConvention::Telescoping);
        let scale = (1usize << k) as f64;
        if r <= scale / 2.0 || r >= 2.0 * scale {
            prop_assert_eq!(family.phi_k(k, r), 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&family.phi_k(k, r)));
    }

    #[test]
    fn besov_norm_is_a_norm(seed in any::<u64>(), lambda in -3.0f64..3.0) {
        let grid = Grid::new(2, 16).unwrap();
        let family = CutoffFamily::new(&grid);
        let f = smap::datagen::random_field::<f64>(&grid, 3.0, 1.0, seed);
        let g = smap::datagen::random_field::<f64>(&grid, 3.0, 1.0, seed.wrapping_add(1));
        let norm = |h: &ComplexField<f64>| besov_norm(h, 1.5, &family).unwrap();
        prop_assert!(norm(&(&f + &g)) <= norm(&f) + norm(&g) + 1e-12);
        let scaled = norm(&f.scale(C::new(lambda, 0.0)));
        prop_assert!((scaled - lambda.abs() * norm(&f)).abs() <= 1e-12 * norm(&f));
        let profile = DyadicProfile::of(&f, &family);
        prop_assert!(profile.besov(2.0) >= profile.besov(1.0));
    }
}
