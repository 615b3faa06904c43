use num_complex::Complex;
use num_rational::Ratio;
use proptest::prelude::*;
use smap::commutator::{
    d_alpha_h0, enumerate_pairings, fd_d_alpha_h0, h_s, h_tilde, pairing_count, taylor_coefficient_c, MultiIndex,
};
use smap::spectral::ComplexField;
use smap::Grid;

type C = Complex<f64>;

/// Counts sets of `k` pairwise disjoint pairs among `m` slots by testing
/// every `k`-subset of the `m(m-1)/2` possible pairs.
fn brute_force_pairings(m: usize, k: usize) -> u128 {
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    fn rec(pairs: &[(usize, usize)], start: usize, k: usize, used: u32) -> u128 {
        if k == 0 {
            return 1;
        }
        (start..pairs.len())
            .filter(|&i| used & (1 << pairs[i].0 | 1 << pairs[i].1) == 0)
            .map(|i| rec(pairs, i + 1, k - 1, used | 1 << pairs[i].0 | 1 << pairs[i].1))
            .sum()
    }
    rec(&pairs, 0, k, 0)
}

#[test]
fn pairing_counts_match_brute_force() {
    for m in 1..=10 {
        for k in 0..=m / 2 {
            let expected = brute_force_pairings(m, k);
            assert_eq!(pairing_count(m, k).unwrap(), expected, "m = {m}, k = {k}");
            let family = enumerate_pairings(m, k).unwrap();
            assert_eq!(family.len() as u128, expected);
            for p in &family.pairings {
                let mut seen = vec![false; m];
                for &(a, b) in p {
                    assert!(a < m && b < m && !seen[a] && !seen[b]);
                    seen[a] = true;
                    seen[b] = true;
                }
            }
        }
    }
    assert!(pairing_count(4, 3).is_err());
}

#[test]
fn taylor_coefficients_are_exact_over_rationals() {
    let s = Ratio::new(3i64, 4);
    // (2s)(2s - 2) = (3/2)(-1/2)
    assert_eq!(taylor_coefficient_c(s, 3, 1).unwrap(), Ratio::new(-3, 4));
    // (3/2)(-1/2)(-5/2)
    assert_eq!(taylor_coefficient_c(s, 3, 0).unwrap(), Ratio::new(15, 8));
    assert_eq!(taylor_coefficient_c(s, 2, 1).unwrap(), Ratio::new(3, 2));
    assert!(taylor_coefficient_c(s, 4, 3).is_err());
}

#[test]
fn one_dimensional_derivatives_have_the_falling_factorial_form() {
    let s = 0.7;
    for &xi in &[0.5, 1.0, 3.0] {
        for a in 1..=6 {
            let mut falling = 1.0;
            for i in 0..a {
                falling *= 2.0 * s - i as f64;
            }
            let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
            let expected = sign * falling * f64::powf(xi, 2.0 * s - a as f64);
            let got = d_alpha_h0(&[xi], &MultiIndex::new(&[a]).unwrap(), s).unwrap();
            assert!(
                (got - expected).abs() <= 1e-12 * expected.abs(),
                "xi = {xi}, a = {a}: {got} vs {expected}"
            );
        }
    }
}

fn plane(grid: &Grid, m: [i32; 3]) -> ComplexField<f64> {
    ComplexField::plane_wave(grid, m, C::new(1.0, 0.0))
}

#[test]
fn commutators_of_plane_waves() {
    let grid = Grid::new(2, 16).unwrap();
    let s = 0.6;
    let (a, b) = ([2, -1, 0], [1, 3, 0]);
    let sym = |m: [i32; 3]| ((m[0] * m[0] + m[1] * m[1]) as f64).powf(s);
    let sum = [3, 2, 0];
    let out = plane(&grid, sum);
    let hs = h_s(&plane(&grid, a), &plane(&grid, b), s).unwrap().to_physical();
    let expected = out.scale(C::new(sym(sum) - sym(a) - sym(b), 0.0));
    assert!((&hs - &expected).norm_l2() < 1e-11);
    let ht = h_tilde(&plane(&grid, a), &plane(&grid, b), s).unwrap().to_physical();
    let expected = out.scale(C::new(sym(sum) - sym(a), 0.0));
    assert!((&ht - &expected).norm_l2() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivatives_match_finite_differences(
        xi in prop::array::uniform3(-4.0f64..4.0),
        alpha in prop::array::uniform3(0usize..=2),
        s in 0.55f64..0.95,
    ) {
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        prop_assume!(r > 0.5);
        let order: usize = alpha.iter().sum();
        prop_assume!((1..=4).contains(&order));
        let alpha = MultiIndex::new(&alpha).unwrap();
        let exact = d_alpha_h0(&xi, &alpha, s).unwrap();
        let fd = fd_d_alpha_h0(&xi, &alpha, s).unwrap();
        let scale = fd.abs().max(r.powf(2.0 * s - order as f64));
        prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{exact} vs {fd}");
    }

    #[test]
    fn h_s_is_symmetric_and_bilinear(seed in any::<u64>(), lambda in -2.0f64..2.0) {
        let grid = Grid::new(2, 16).unwrap();
        let f = smap::datagen::random_field::<f64>(&grid, 2.0, 1.0, seed);
        let g = smap::datagen::random_field::<f64>(&grid, 2.0, 1.0, seed ^ 0xABCD);
        let s = 0.75;
        let fg = h_s(&f, &g, s).unwrap().to_physical();
        let gf = h_s(&g, &f, s).unwrap().to_physical();
        prop_assert!((&fg - &gf).norm_l2() < 1e-11 * fg.norm_l2().max(1.0));
        let scaled = h_s(&f.scale(C::new(lambda, 0.0)), &g, s).unwrap().to_physical();
        prop_assert!((&scaled - &fg.scale(C::new(lambda, 0.0))).norm_l2() < 1e-11 * fg.norm_l2().max(1.0));
    }
}
