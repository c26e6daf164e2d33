use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treespec::graph::{enumerate_subtree_vertices, CayleyConfig};
use treespec::multiplier::{
    continuation_solve, default_path, quartic_coefficients_m2, solve_equal_length, solve_multipliers,
    summability_check, system_residual, MultiplierSource, ToleranceConfig,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn off_axis() -> impl Strategy<Value = Complex64> {
    (-30.0..30.0f64, 0.05..15.0f64, any::<bool>()).prop_map(|(re, im, up)| c(re, if up { im } else { -im }))
}

fn pair_lengths() -> impl Strategy<Value = CayleyConfig> {
    (0.4..2.0f64, 0.4..2.0f64).prop_map(|(a, b)| CayleyConfig::free(&[a, b]).unwrap())
}

fn relative_poly_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (k, ck) in coeffs.iter().enumerate() {
        let power = z.powu((coeffs.len() - 1 - k) as u32);
        value += ck * power;
        scale += ck.norm() * power.norm();
    }
    value.norm() / scale
}

/// Largest root of the secular equation `1 = Σ 2t_k/(x + t_k)` of `2vvᵀ − diag(t)`.
fn secular_radius(magnitudes: &[f64]) -> f64 {
    let t: Vec<f64> = magnitudes.iter().map(|m| m * m).collect();
    let f = |x: f64| t.iter().map(|tk| 2.0 * tk / (x + tk)).sum::<f64>() - 1.0;
    let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (-tmin, 2.0 * t.iter().sum::<f64>() + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Σ |y₊(w)|²` over the half tree of depth `depth`, grouped by last letter type.
fn tree_sum(magnitudes: &[f64], depth: usize) -> f64 {
    let t: Vec<f64> = magnitudes.iter().map(|m| m * m).collect();
    let mut total = 0.0;
    for root in 0..t.len() {
        let mut level: Vec<f64> = (0..t.len()).map(|k| if k == root { t[k] } else { 0.0 }).collect();
        total += level.iter().sum::<f64>();
        for _ in 1..depth {
            let all: f64 = level.iter().sum();
            level = (0..t.len()).map(|k| t[k] * (2.0 * all - level[k])).collect();
            total += level.iter().sum::<f64>();
            if total > 1e300 {
                return f64::INFINITY;
            }
        }
    }
    total
}

fn enumerated_sum(magnitudes: &[f64], depth: usize) -> f64 {
    let mut total = 0.0;
    for root in 0..magnitudes.len() {
        for w in enumerate_subtree_vertices(magnitudes.len(), root, depth).unwrap() {
            total += w.letters().iter().map(|l| magnitudes[l.generator()].powi(2)).product::<f64>();
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_symmetry(lambda in off_axis(), g in pair_lengths()) {
        let tol = ToleranceConfig::default();
        let a = solve_multipliers(lambda, &g, &tol).unwrap();
        let b = solve_multipliers(lambda.conj(), &g, &tol).unwrap();
        for (x, y) in a.mu.iter().zip(&b.mu) {
            prop_assert!((x - y.conj()).norm() <= 1e-10);
        }
    }

    #[test]
    fn strictly_inside_the_disc_off_the_axis(lambda in off_axis(), g in pair_lengths()) {
        let set = solve_multipliers(lambda, &g, &ToleranceConfig::default()).unwrap();
        prop_assert!(set.mu.iter().all(|m| m.norm() < 1.0 && m.norm() > 0.0), "{:?}", set.mu);
        prop_assert!(set.summability_radius < 1.0);
        prop_assert!(set.residual <= 1e-8);
    }

    #[test]
    fn accepted_sets_solve_the_system(lambda in off_axis(), g in pair_lengths()) {
        let set = solve_multipliers(lambda, &g, &ToleranceConfig::default()).unwrap();
        let r = system_residual(&set.mu, lambda, &g).unwrap();
        let scale = 1.0 + set.mu.iter().map(|m| m.norm().recip()).sum::<f64>();
        prop_assert!(r.iter().all(|x| x.norm() <= 1e-7 * scale), "{r:?}");
    }

    #[test]
    fn both_quartics_hold(lambda in off_axis(), g in pair_lengths()) {
        let set = solve_multipliers(lambda, &g, &ToleranceConfig::default()).unwrap();
        for index in 0..2 {
            let q = quartic_coefficients_m2(lambda, &g, index).unwrap();
            prop_assert!(relative_poly_residual(&q.c, set.mu[index]) <= 1e-9);
        }
    }

    #[test]
    fn quartic_has_no_linear_term(re in -50.0..50.0f64, im in -20.0..20.0f64, g in pair_lengths()) {
        let lambda = c(re, im);
        if let Ok(q) = quartic_coefficients_m2(lambda, &g, 0) {
            prop_assert_eq!(q.c[3], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn spectral_radius_matches_secular_equation(m in proptest::collection::vec(0.0..1.5f64, 1..6)) {
        prop_assume!(m.iter().any(|&x| x > 1e-3));
        let rho = summability_check(&m);
        let want = secular_radius(&m);
        prop_assert!((rho - want).abs() <= 1e-12 * want.max(1.0), "{rho} vs {want}");
    }
}

#[test]
fn equal_magnitude_boundary_is_one_over_root_three() {
    let (mut lo, mut hi) = (0.1f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if summability_check(&[mid, mid]) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - 1.0 / 3f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn layered_sum_matches_enumeration() {
    for m in [[0.9, 0.1], [0.5, 0.45], [0.3, 0.7]] {
        let a = tree_sum(&m, 7);
        let b = enumerated_sum(&m, 7);
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
    }
}

#[test]
fn spectral_radius_agrees_with_tree_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 20 {
        let m = [rng.gen_range(0.0..1.2), rng.gen_range(0.0..1.2)];
        let rho = summability_check(&m);
        // depth 25 cannot separate radii near one
        if (0.6..2.0).contains(&rho) {
            continue;
        }
        let sum = tree_sum(&m, 25);
        assert_eq!(rho < 1.0, sum < 1e6, "{m:?}: rho {rho}, sum {sum}");
        checked += 1;
    }
}

#[test]
fn asymptotic_decay() {
    for lengths in [[1.0, 1.0], [1.0, 0.7]] {
        let g = CayleyConfig::free(&lengths).unwrap();
        let mut previous = f64::INFINITY;
        for r in [1e2, 1e3, 1e4] {
            let set = solve_multipliers(c(-r, 0.0), &g, &ToleranceConfig::default()).unwrap();
            let mut worst: f64 = 0.0;
            for (mu, l) in set.mu.iter().zip(lengths) {
                // the limit of |μ_m| e^{√R l_m} is 1/M
                let scaled = mu.norm() * (r.sqrt() * l).exp() * 2.0;
                worst = worst.max((scaled - 1.0).abs());
            }
            assert!(worst <= previous, "R {r}: {worst}");
            previous = worst;
        }
        assert!(previous <= 0.02, "{previous}");
    }
}

#[test]
fn quartic_agrees_with_continuation() {
    let g = CayleyConfig::free(&[1.0, 2.0]).unwrap();
    let tol = ToleranceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let im = rng.gen_range(0.2..8.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lambda = c(rng.gen_range(-20.0..20.0), im);
        let a = solve_multipliers(lambda, &g, &tol).unwrap();
        assert_eq!(a.source, MultiplierSource::QuarticElimination);
        let b = continuation_solve(&g, lambda, &default_path(&g, lambda).unwrap()).unwrap();
        for (x, y) in a.mu.iter().zip(&b.mu) {
            assert!((x - y).norm() <= 1e-9, "{lambda}: {x} vs {y}");
        }
    }
}

#[test]
fn continuation_for_rank_three() {
    let g = CayleyConfig::free(&[1.0, 1.0, 1.0]).unwrap();
    for lambda in [c(-1.0, 0.0), c(2.0, 0.5), c(-4.0, -3.0)] {
        let b = continuation_solve(&g, lambda, &default_path(&g, lambda).unwrap()).unwrap();
        let want = solve_equal_length(lambda, 3, g.edge(0).unwrap())[0];
        assert!(b.mu.iter().all(|m| (m - want).norm() <= 1e-9), "{:?} vs {want}", b.mu);
    }
}

#[test]
fn unequal_rank_three_uses_continuation() {
    let g = CayleyConfig::free(&[1.0, 1.3, 0.8]).unwrap();
    let lambda = c(1.5, 0.4);
    let set = solve_multipliers(lambda, &g, &ToleranceConfig::default()).unwrap();
    assert_eq!(set.source, MultiplierSource::Continuation);
    assert!(set.mu.iter().all(|m| m.norm() < 1.0));
    let r = system_residual(&set.mu, lambda, &g).unwrap();
    assert!(r.iter().all(|x| x.norm() < 1e-8));
}

#[test]
fn mixed_lengths_near_zero() {
    let g = CayleyConfig::free(&[1.0, 2.0]).unwrap();
    let set = solve_multipliers(c(-1e-6, 0.0), &g, &ToleranceConfig::default()).unwrap();
    assert!((set.mu[0] - set.mu[1]).norm() > 1e-3);
    assert!(set.mu.iter().all(|m| m.norm() < 1.0));
}
