use num_complex::Complex64;
use treespec::graph::{CayleyConfig, EdgeSpec, Letter, PotentialSpec, Word};
use treespec::multiplier::{solve_multipliers, ToleranceConfig};
use treespec::resolvent::{apply_resolvent, kernel_eval, EdgeLoad};

fn bump(x: f64) -> Complex64 {
    Complex64::new((std::f64::consts::PI * x).sin().powi(2), 0.0)
}

fn root_edge(m: usize) -> Word {
    Word::identity().times(Letter::pos(m))
}

#[test]
fn defect_and_kirchhoff_equal_lengths() {
    let g = CayleyConfig::free(&[1.0, 1.0]).unwrap();
    let set = solve_multipliers(Complex64::new(-1.0, 0.0), &g, &ToleranceConfig::default()).unwrap();
    let h = apply_resolvent(&g, &set, &[EdgeLoad::new(root_edge(0), bump)], 5, 400).unwrap();
    let defect = h.ode_defect(20, 1e-3).unwrap();
    let kirchhoff = h.kirchhoff_residual().unwrap();
    assert!(defect <= 1e-4, "defect {defect}");
    assert!(kirchhoff <= 1e-6, "kirchhoff {kirchhoff}");
    assert!(h.max_ratio_error().unwrap() < 1e-10);
}

#[test]
fn defect_and_kirchhoff_mixed_lengths_complex_lambda() {
    let g = CayleyConfig::free(&[1.0, 2.0]).unwrap();
    let set = solve_multipliers(Complex64::new(0.8, 0.3), &g, &ToleranceConfig::default()).unwrap();
    let loads = [
        EdgeLoad::new(root_edge(1), |x| Complex64::new((x * 0.5 * std::f64::consts::PI).sin().powi(2), 0.0)),
        EdgeLoad::new(Word::identity().times(Letter::neg(0)).times(Letter::pos(1)), bump),
    ];
    let h = apply_resolvent(&g, &set, &loads, 4, 400).unwrap();
    assert!(h.ode_defect(10, 1e-3).unwrap() <= 1e-4);
    assert!(h.kirchhoff_residual().unwrap() <= 1e-6);
}

#[test]
fn sampled_potential_resolvent() {
    let vals = vec![0.0, 1.0, 2.0, 1.0, 0.0];
    let g = CayleyConfig::new(vec![
        EdgeSpec::new(1.0, PotentialSpec::Sampled(vals)).unwrap(),
        EdgeSpec::new(1.5, PotentialSpec::Constant(0.5)).unwrap(),
    ])
    .unwrap();
    let set = solve_multipliers(Complex64::new(-0.5, 0.2), &g, &ToleranceConfig::default()).unwrap();
    let h = apply_resolvent(&g, &set, &[EdgeLoad::new(root_edge(0), bump)], 2, 200).unwrap();
    assert!(h.kirchhoff_residual().unwrap() <= 1e-6);
    // probe points avoid the kinks of the piecewise-linear potential
    let d = h.ode_defect(4, 1e-3).unwrap();
    assert!(d <= 1e-4, "defect {d}");
}

#[test]
fn values_decay_by_multiplier_per_generation() {
    let g = CayleyConfig::free(&[1.0, 1.0]).unwrap();
    let set = solve_multipliers(Complex64::new(-1.0, 0.0), &g, &ToleranceConfig::default()).unwrap();
    let h = apply_resolvent(&g, &set, &[EdgeLoad::new(root_edge(0), bump)], 6, 200).unwrap();
    let mu = set.mu[0].norm();
    let mut w = root_edge(0);
    let first = h.vertex_value(&w).unwrap().norm();
    for n in 1..6 {
        w = w.times(Letter::pos(1));
        let v = h.vertex_value(&w).unwrap().norm();
        assert!((v / first - mu.powi(n)).abs() < 1e-12 * mu.powi(n).max(1e-300));
    }
}

#[test]
fn kernel_symmetry() {
    let g = CayleyConfig::free(&[1.0, 2.0]).unwrap();
    let set = solve_multipliers(Complex64::new(1.3, -0.6), &g, &ToleranceConfig::default()).unwrap();
    for (x, t) in [(0.1, 0.7), (0.5, 0.2), (0.9, 0.95), (0.0, 1.0)] {
        for m in 0..2 {
            let a = kernel_eval(&g, m, x, t, &set).unwrap();
            let b = kernel_eval(&g, m, t, x, &set).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
