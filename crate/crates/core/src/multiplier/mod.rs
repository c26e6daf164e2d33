//! The multiplier system
//!
//! ```text
//! (μ_m² − 1) / (S_m μ_m) = 2 Σ_k (μ_k − C_k) / S_k,     m = 1..M
//! ```
//!
//! with `C_k = C_k(l_k, λ)`, `S_k = S_k(l_k, λ)`, its reductions, and the
//! filters that single out the square-summable solution.

mod continuation;
mod roots;
mod summability;

pub use continuation::{continuation_solve, default_path};
pub use roots::{polynomial_roots, quartic_coefficients_m2, QuarticCoefficients};
pub use summability::{summability_check, summability_proxy_rejects};

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{CayleyConfig, EdgeSpec};
use crate::sturm::end_pair;

/// Guard for divisions by `S_m` and `S_m μ_m`.
const DIVISOR_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceConfig {
    /// Largest accepted scaled residual of the multiplier system.
    pub residual: f64,
    /// Distance from `S_m(l_m, σ) = 0` or `μ = ±1` treated as exceptional.
    pub exceptional: f64,
    /// `|Im μ⁺|` above which a real point is classified as spectrum.
    pub reality: f64,
    /// Base offset from the real axis for boundary values.
    pub epsilon: f64,
    /// Newton steps used to polish polynomial roots.
    pub polish_steps: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { residual: 1e-8, exceptional: 1e-8, reality: 1e-7, epsilon: 1e-4, polish_steps: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiplierSource {
    QuarticElimination,
    EqualLengthQuadratic,
    Continuation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSet {
    pub lambda: Complex64,
    pub mu: Vec<Complex64>,
    pub residual: f64,
    pub summability_radius: f64,
    pub source: MultiplierSource,
    /// More than one candidate survived the filters.
    pub ambiguous: bool,
}

impl MultiplierSet {
    pub fn rank(&self) -> usize {
        self.mu.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.mu.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

/// `C_k(l_k, λ)` and `S_k(l_k, λ)` for every edge type.
#[derive(Clone, Debug)]
pub(crate) struct EndValues {
    pub c: Vec<Complex64>,
    pub s: Vec<Complex64>,
}

impl EndValues {
    pub fn at(graph: &CayleyConfig, lambda: Complex64) -> Self {
        let (c, s) = graph
            .edges()
            .iter()
            .map(|e| {
                let p = end_pair(e, lambda);
                (p.c, p.s)
            })
            .unzip();
        EndValues { c, s }
    }

    pub fn min_abs_s(&self) -> f64 {
        self.s.iter().map(|s| s.norm()).fold(f64::INFINITY, f64::min)
    }

    fn identical(&self) -> bool {
        self.c.iter().all(|&c| c == self.c[0]) && self.s.iter().all(|&s| s == self.s[0])
    }

    /// `Σ_k (μ_k − C_k) / S_k`.
    fn coupling(&self, mu: &[Complex64]) -> Complex64 {
        mu.iter().zip(&self.c).zip(&self.s).map(|((&m, &c), &s)| (m - c) / s).sum()
    }

    fn raw_residual(&self, mu: &[Complex64]) -> Vec<Complex64> {
        let sum = self.coupling(mu) * 2.0;
        mu.iter().zip(&self.s).map(|(&m, &s)| (m * m - 1.0) / (s * m) - sum).collect()
    }

    /// Residual divided by the size of the terms that cancel in it.
    pub fn scaled_residual(&self, mu: &[Complex64]) -> f64 {
        let raw = self.raw_residual(mu);
        let coupling: f64 =
            mu.iter().zip(&self.c).zip(&self.s).map(|((m, c), s)| 2.0 * (m.norm() + c.norm()) / s.norm()).sum();
        raw.iter()
            .zip(mu.iter().zip(&self.s))
            .map(|(r, (&m, &s))| r.norm() / (1.0 + ((m * m - 1.0) / (s * m)).norm() + coupling))
            .fold(0.0, f64::max)
    }

    /// Residual rows multiplied by `S_m μ_m`:
    /// `F_m = μ_m² − 1 − 2 S_m μ_m Σ_k (μ_k − C_k)/S_k`, which stays O(1)
    /// even when the multipliers are tiny.
    fn normalized(&self, mu: &[Complex64]) -> (DVector<Complex64>, DMatrix<Complex64>) {
        let n = mu.len();
        let sum = self.coupling(mu);
        let f = DVector::from_iterator(n, (0..n).map(|m| mu[m] * mu[m] - 1.0 - self.s[m] * mu[m] * sum * 2.0));
        let jac = DMatrix::from_fn(n, n, |m, j| {
            if m == j {
                -self.s[m] * sum * 2.0
            } else {
                -self.s[m] * mu[m] * 2.0 / self.s[j]
            }
        });
        (f, jac)
    }

    /// One Newton step on the normalized system; `None` if the Jacobian is
    /// singular.
    pub fn newton_step(&self, mu: &[Complex64]) -> Option<Vec<Complex64>> {
        let (f, jac) = self.normalized(mu);
        let delta = jac.lu().solve(&f)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return None;
        }
        Some(mu.iter().zip(delta.iter()).map(|(&m, &d)| m - d).collect())
    }

    /// Newton polish that keeps a step only when it lowers the residual.
    pub fn polish(&self, mu: &[Complex64], steps: usize) -> Vec<Complex64> {
        let mut best = mu.to_vec();
        let mut best_res = self.scaled_residual(&best);
        for _ in 0..steps {
            let Some(next) = self.newton_step(&best) else { break };
            let res = self.scaled_residual(&next);
            if !(res < best_res) {
                break;
            }
            best = next;
            best_res = res;
        }
        best
    }
}

/// Newton on the multiplier system at real `σ` from a nearby seed. Fails
/// when an update jumps by more than half the current magnitude or the
/// residual does not settle.
pub fn polish_on_axis(sigma: f64, graph: &CayleyConfig, seed: &[Complex64]) -> Option<Vec<Complex64>> {
    let ends = EndValues::at(graph, Complex64::new(sigma, 0.0));
    if ends.min_abs_s() < DIVISOR_FLOOR {
        return None;
    }
    let mut mu = seed.to_vec();
    for _ in 0..60 {
        let next = ends.newton_step(&mu)?;
        let rel = mu
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).norm() / a.norm().max(1e-300))
            .fold(0.0, f64::max);
        if rel > 0.5 {
            return None;
        }
        mu = next;
        if rel < 1e-15 {
            break;
        }
    }
    (ends.scaled_residual(&mu) < 1e-12).then_some(mu)
}

/// Left minus right side of the multiplier system, one entry per edge type.
pub fn system_residual(mu: &[Complex64], lambda: Complex64, graph: &CayleyConfig) -> Result<Vec<Complex64>> {
    if mu.len() != graph.rank() {
        return Err(Error::RankMismatch { expected: graph.rank(), actual: mu.len() });
    }
    let ends = EndValues::at(graph, lambda);
    if ends.min_abs_s() < DIVISOR_FLOOR {
        return Err(Error::NearZeroDivisor("S_m(l_m, λ)"));
    }
    if mu.iter().zip(&ends.s).any(|(m, s)| (m * s).norm() < DIVISOR_FLOOR) {
        return Err(Error::NearZeroDivisor("S_m μ_m"));
    }
    Ok(ends.raw_residual(mu))
}

/// Both roots of `(2M−1)μ² − 2M C μ + 1 = 0`, smaller magnitude first.
pub fn solve_equal_length(lambda: Complex64, rank: usize, edge: &EdgeSpec) -> [Complex64; 2] {
    equal_length_roots(rank, end_pair(edge, lambda).c)
}

fn equal_length_roots(rank: usize, c: Complex64) -> [Complex64; 2] {
    let a = (2 * rank - 1) as f64;
    let b = c * (rank as f64);
    let disc = (b * b - a).sqrt();
    // pick the sign that avoids cancellation, recover the other from the product
    let big = if (b + disc).norm() >= (b - disc).norm() { (b + disc) / a } else { (b - disc) / a };
    let small = 1.0 / (a * big);
    [small, big]
}

/// Companion roots of a quadratic `ξ² − b ξ − 1 = 0` for one edge type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Partner {
    Unique(Complex64),
    /// Both roots on the unit circle.
    Tie(Complex64, Complex64),
}

impl Partner {
    fn options(self) -> Vec<Complex64> {
        match self {
            Partner::Unique(x) => vec![x],
            Partner::Tie(a, b) => vec![a, b],
        }
    }
}

const TIE_WIDTH: f64 = 1e-12;

/// Recovers `μ_2..μ_M` from `μ_1` through `ξ² − G S_k ξ − 1 = 0`,
/// `G = (μ_1² − 1)/(S_1 μ_1)`. Entry 0 is `μ_1` itself.
pub fn partner_multipliers(mu_first: Complex64, lambda: Complex64, graph: &CayleyConfig) -> Result<Vec<Partner>> {
    let ends = EndValues::at(graph, lambda);
    partners_from(mu_first, &ends)
}

fn partners_from(mu_first: Complex64, ends: &EndValues) -> Result<Vec<Partner>> {
    if (mu_first * ends.s[0]).norm() < DIVISOR_FLOOR {
        return Err(Error::NearZeroDivisor("S_1 μ_1"));
    }
    let g = (mu_first * mu_first - 1.0) / (ends.s[0] * mu_first);
    let mut out = vec![Partner::Unique(mu_first)];
    for &s in &ends.s[1..] {
        let b = g * s;
        let disc = (b * b + 4.0).sqrt();
        let big = if (b + disc).norm() >= (b - disc).norm() { (b + disc) / 2.0 } else { (b - disc) / 2.0 };
        let small = -1.0 / big;
        if (big.norm() - 1.0).abs() < TIE_WIDTH {
            out.push(Partner::Tie(small, big));
        } else {
            out.push(Partner::Unique(small));
        }
    }
    Ok(out)
}

/// `|Σ ξ_m²/(ξ_m²+1) − 1/2|`; zero marks the singular set where the
/// gradients of the system become dependent.
pub fn gradient_singularity_check(mu: &[Complex64]) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for &x in mu {
        let denom = x * x + 1.0;
        if denom.norm() < 1e-10 {
            return 0.0;
        }
        sum += x * x / denom;
    }
    (sum - 0.5).norm()
}

/// True when some `S_m(l_m, λ)` is within `tol` of zero.
pub fn is_exceptional(lambda: Complex64, graph: &CayleyConfig, tol: f64) -> bool {
    EndValues::at(graph, lambda).min_abs_s() < tol
}

/// The square-summable solution of the multiplier system at `λ`.
pub fn solve_multipliers(lambda: Complex64, graph: &CayleyConfig, tol: &ToleranceConfig) -> Result<MultiplierSet> {
    let ends = EndValues::at(graph, lambda);
    if ends.min_abs_s() < tol.exceptional {
        return Err(Error::Exceptional(lambda));
    }
    let m = graph.rank();
    let (candidates, source) = if ends.identical() {
        let roots = equal_length_roots(m, ends.c[0]);
        (roots.iter().map(|&r| vec![r; m]).collect(), MultiplierSource::EqualLengthQuadratic)
    } else if m == 2 {
        (quartic_candidates(&ends, tol)?, MultiplierSource::QuarticElimination)
    } else {
        let found = continuation_solve(graph, lambda, &default_path(graph, lambda)?)?;
        return Ok(found);
    };
    select_candidate(lambda, &ends, candidates, source, tol)
}

fn quartic_candidates(ends: &EndValues, tol: &ToleranceConfig) -> Result<Vec<Vec<Complex64>>> {
    let quartic = roots::quartic_from_ends(ends, 0);
    let mut out = Vec::new();
    for r in polynomial_roots(&quartic.c, tol.polish_steps)? {
        let Ok(partners) = partners_from(r, ends) else { continue };
        for p in partners[1].options() {
            out.push(vec![r, p]);
        }
    }
    Ok(out)
}

pub(crate) fn select_candidate(
    lambda: Complex64,
    ends: &EndValues,
    candidates: Vec<Vec<Complex64>>,
    source: MultiplierSource,
    tol: &ToleranceConfig,
) -> Result<MultiplierSet> {
    let mut survivors: Vec<MultiplierSet> = Vec::new();
    for cand in candidates {
        if cand.iter().zip(&ends.s).any(|(m, s)| (m * s).norm() < DIVISOR_FLOOR) {
            continue;
        }
        let mu = ends.polish(&cand, tol.polish_steps);
        let residual = ends.scaled_residual(&mu);
        if !(residual <= tol.residual) || mu.iter().any(|x| x.norm() > 1.0) {
            continue;
        }
        let mags: Vec<f64> = mu.iter().map(|x| x.norm()).collect();
        if summability_proxy_rejects(&mags) {
            continue;
        }
        let rho = summability_check(&mags);
        if !(rho < 1.0) {
            continue;
        }
        let set = MultiplierSet { lambda, mu, residual, summability_radius: rho, source, ambiguous: false };
        // a spurious root can be polished onto the true one; keep the better copy
        match survivors
            .iter_mut()
            .find(|s| s.mu.iter().zip(&set.mu).all(|(a, b)| (a - b).norm() <= 1e-9 * (1.0 + a.norm())))
        {
            Some(existing) if set.residual < existing.residual => *existing = set,
            Some(_) => {}
            None => survivors.push(set),
        }
    }
    let ambiguous = survivors.len() > 1;
    let mut best = survivors
        .into_iter()
        .min_by(|a, b| a.summability_radius.total_cmp(&b.summability_radius))
        .ok_or(Error::NoCandidate(lambda))?;
    if ambiguous {
        warn!("several multiplier candidates survive at λ = {lambda}; keeping smallest radius");
        best.ambiguous = true;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_pair() -> CayleyConfig {
        CayleyConfig::free(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn residual_vanishes_on_both_quadratic_roots_at_zero() {
        let g = unit_pair();
        for mu in [1.0 / 3.0, 1.0] {
            let r = system_residual(&[c(mu, 0.0), c(mu, 0.0)], c(0.0, 0.0), &g).unwrap();
            assert!(r.iter().all(|x| x.norm() < 1e-15), "{r:?}");
        }
    }

    #[test]
    fn residual_detects_perturbation() {
        let g = unit_pair();
        let r = system_residual(&[c(1.0 / 3.0 + 1e-3, 0.0), c(1.0 / 3.0, 0.0)], c(0.0, 0.0), &g).unwrap();
        assert!(r[0].norm() > 1e-4);
    }

    #[test]
    fn residual_rejects_zero_multiplier() {
        let g = unit_pair();
        assert!(system_residual(&[c(0.0, 0.0), c(0.5, 0.0)], c(-1.0, 0.0), &g).is_err());
        assert!(system_residual(&[c(0.5, 0.0)], c(-1.0, 0.0), &g).is_err());
    }

    #[test]
    fn equal_length_roots_at_zero() {
        let e = EdgeSpec::free(1.0).unwrap();
        let [a, b] = solve_equal_length(c(0.0, 0.0), 2, &e);
        assert!((a - 1.0 / 3.0).norm() < 1e-15 && (b - 1.0).norm() < 1e-15);
        let [a, b] = solve_equal_length(c(0.0, 0.0), 3, &e);
        assert!((a - 0.2).norm() < 1e-15 && (b - 1.0).norm() < 1e-15);
        assert!((a * b - 0.2).norm() < 1e-15);
    }

    #[test]
    fn equal_length_roots_real_outside_band() {
        let e = EdgeSpec::free(1.0).unwrap();
        for sigma in [0.01f64, 0.1, 0.2, 0.27] {
            assert!(sigma.sqrt().cos().powi(2) >= 0.75);
            for r in solve_equal_length(c(sigma, 0.0), 2, &e) {
                assert_eq!(r.im, 0.0);
            }
        }
    }

    #[test]
    fn partner_of_symmetric_solution() {
        let g = unit_pair();
        let p = partner_multipliers(c(1.0 / 3.0, 0.0), c(0.0, 0.0), &g).unwrap();
        match p[1] {
            Partner::Unique(x) => assert!((x - 1.0 / 3.0).norm() < 1e-15),
            Partner::Tie(..) => panic!("unexpected tie"),
        }
    }

    #[test]
    fn spurious_quartic_root_is_filtered() {
        let g = unit_pair();
        let ends = EndValues::at(&g, c(0.0, 0.0));
        let mu1 = c(2.0 - 5f64.sqrt(), 0.0);
        let Partner::Unique(mu2) = partners_from(mu1, &ends).unwrap()[1] else { panic!() };
        let tol = ToleranceConfig::default();
        let picked = select_candidate(c(0.0, 0.0), &ends, vec![vec![mu1, mu2]], MultiplierSource::QuarticElimination, &tol);
        assert!(picked.is_err());
    }

    #[test]
    fn singularity_measure() {
        assert!((gradient_singularity_check(&[c(1.0 / 3.0, 0.0); 2]) - 0.3).abs() < 1e-15);
        assert_eq!(gradient_singularity_check(&[c(1.0, 0.0)]), 0.0);
        assert_eq!(gradient_singularity_check(&[c(0.0, 1.0 + 1e-12), c(0.2, 0.0)]), 0.0);
    }

    #[test]
    fn equal_length_negative_axis() {
        let g = unit_pair();
        let set = solve_multipliers(c(-1.0, 0.0), &g, &ToleranceConfig::default()).unwrap();
        let ch = 1f64.cosh();
        let expected = (4.0 * ch - (16.0 * ch * ch - 12.0).sqrt()) / 6.0;
        assert_eq!(set.source, MultiplierSource::EqualLengthQuadratic);
        for m in &set.mu {
            assert!((m - expected).norm() < 1e-14);
            assert!(m.im.abs() < 1e-15 && m.re > 0.0 && m.re < 1.0 / 3f64.sqrt());
        }
    }

    #[test]
    fn exceptional_point_is_reported() {
        let g = unit_pair();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(matches!(
            solve_multipliers(c(pi2, 0.0), &g, &ToleranceConfig::default()),
            Err(Error::Exceptional(_))
        ));
    }
}
