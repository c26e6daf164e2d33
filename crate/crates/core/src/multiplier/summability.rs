//! Square summability of `y₊` over a half tree.
//!
//! Let `a_m(n)` be the sum of `|y₊(w)|²` over vertices at depth `n` whose
//! last letter has type `m`. A type-`m` vertex has one continuation of type
//! `m` and two of every other type, so `a(n+1) = Bᵀ a(n)` up to ordering with
//! `B_mm = t_m`, `B_mk = 2 t_m`, `t_m = |μ_m|²`. The series converges iff
//! the spectral radius of `B` is below one.

/// Cheap rejection: every row sum of `B` exceeds one once all
/// `|μ_m| > 1/√(2M−1)`, and the spectral radius dominates the smallest row sum.
pub fn summability_proxy_rejects(magnitudes: &[f64]) -> bool {
    let threshold = 1.0 / ((2 * magnitudes.len() - 1) as f64).sqrt();
    magnitudes.iter().all(|&m| m > threshold)
}

/// Spectral radius of `B`.
///
/// `B = diag(t)(2J − I)` is similar to the symmetric `2vvᵀ − diag(t)` with
/// `v = √t`, which is iterated with a shift so every eigenvalue is
/// nonnegative and the Rayleigh quotient gives the Perron root.
pub fn summability_check(magnitudes: &[f64]) -> f64 {
    let t: Vec<f64> = magnitudes.iter().map(|m| m * m).collect();
    let v: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
    let n = t.len();
    if n == 1 {
        return t[0];
    }
    let shift = t.iter().cloned().fold(0.0, f64::max);
    let apply = |x: &[f64]| -> Vec<f64> {
        let dot: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
        (0..n).map(|i| 2.0 * v[i] * dot - t[i] * x[i] + shift * x[i]).collect()
    };
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut x = v.clone();
    let nx = norm(&x);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|a| *a /= nx);
    let mut estimate = f64::NAN;
    for _ in 0..10_000 {
        let y = apply(&x);
        let rayleigh: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        x = y.into_iter().map(|a| a / ny).collect();
        // the quotient can oscillate in its last bit, so stop within a few ulps
        if (rayleigh - estimate).abs() <= 4.0 * f64::EPSILON * rayleigh.abs() {
            estimate = rayleigh;
            break;
        }
        estimate = rayleigh;
    }
    estimate - shift
}
