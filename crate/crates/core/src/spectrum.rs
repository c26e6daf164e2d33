//! Boundary values `μ⁺(σ) = lim_{ε↓0} μ(σ + iε)` on `[0, ∞)` and the band
//! structure they reveal: `σ` lies in the spectrum where some `μ⁺_m(σ)` is
//! not real.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CayleyConfig;
use crate::multiplier::{polish_on_axis, solve_multipliers, ToleranceConfig};
use crate::sturm::end_pair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Resolvent,
    Spectrum,
    Exceptional,
    Unresolved,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Resolvent => "resolvent",
            Classification::Spectrum => "spectrum",
            Classification::Exceptional => "exceptional",
            Classification::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSample {
    pub sigma: f64,
    /// NaN entries when no boundary value was obtained.
    pub mu_plus: Vec<Complex64>,
    /// `μ⁺ − μ⁻ = 2i Im μ⁺`.
    pub delta: Vec<Complex64>,
    pub classification: Classification,
    pub epsilon_used: f64,
    /// The real-axis Newton refinement failed and the extrapolated value
    /// was kept.
    pub extrapolated_only: bool,
}

impl SpectralSample {
    fn empty(sigma: f64, rank: usize, classification: Classification, epsilon: f64) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        SpectralSample {
            sigma,
            mu_plus: vec![nan; rank],
            delta: vec![nan; rank],
            classification,
            epsilon_used: epsilon,
            extrapolated_only: false,
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.mu_plus.iter().map(|m| m.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    /// Grid spacing in `σ` where the band was detected.
    pub resolution: f64,
}

impl Band {
    pub fn contains(&self, sigma: f64, slack: f64) -> bool {
        sigma >= self.lower - slack && sigma <= self.upper + slack
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Abscissa {
    #[default]
    Sigma,
    SqrtSigma,
}

/// `μ⁺(σ)` from solves at `σ + iε` and `σ + iε/2`, Richardson extrapolated
/// to `ε = 0` and then refined by Newton on the real-axis system.
pub fn multipliers_on_axis(sigma: f64, graph: &CayleyConfig, tol: &ToleranceConfig) -> SpectralSample {
    let m = graph.rank();
    let eps = tol.epsilon;
    let exceptional_s = graph.edges().iter().any(|e| end_pair(e, Complex64::new(sigma, 0.0)).s.norm() < tol.exceptional);
    if exceptional_s {
        return SpectralSample::empty(sigma, m, Classification::Exceptional, eps);
    }
    let solve = |e: f64| solve_multipliers(Complex64::new(sigma, e), graph, tol);
    let (coarse, fine) = match (solve(eps), solve(eps / 2.0)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::Exceptional(_)), _) | (_, Err(Error::Exceptional(_))) => {
            return SpectralSample::empty(sigma, m, Classification::Exceptional, eps)
        }
        _ => return SpectralSample::empty(sigma, m, Classification::Unresolved, eps),
    };
    let extrapolated: Vec<Complex64> = fine.mu.iter().zip(&coarse.mu).map(|(f, c)| f * 2.0 - c).collect();
    let polished = polish_on_axis(sigma, graph, &extrapolated).filter(|p| p.iter().all(|x| x.norm() <= 1.0 + 1e-9));
    let extrapolated_only = polished.is_none();
    let mu_plus = polished.unwrap_or(extrapolated);
    let delta = mu_plus.iter().map(|x| Complex64::new(0.0, 2.0 * x.im)).collect();
    let near_unit = mu_plus.iter().any(|x| (x - 1.0).norm() < tol.exceptional || (x + 1.0).norm() < tol.exceptional);
    let max_im = mu_plus.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
    let classification = if near_unit {
        Classification::Exceptional
    } else if max_im > tol.reality {
        Classification::Spectrum
    } else {
        Classification::Resolvent
    };
    SpectralSample { sigma, mu_plus, delta, classification, epsilon_used: eps, extrapolated_only }
}

fn grid(sigma_min: f64, sigma_max: f64, points: usize, abscissa: Abscissa) -> Vec<f64> {
    let last = (points - 1) as f64;
    match abscissa {
        Abscissa::Sigma => (0..points).map(|i| sigma_min + (sigma_max - sigma_min) * i as f64 / last).collect(),
        Abscissa::SqrtSigma => {
            let (a, b) = (sigma_min.sqrt(), sigma_max.sqrt());
            (0..points).map(|i| (a + (b - a) * i as f64 / last).powi(2)).collect()
        }
    }
}

fn sample_with_retry(sigma: f64, graph: &CayleyConfig, tol: &ToleranceConfig) -> SpectralSample {
    let s = multipliers_on_axis(sigma, graph, tol);
    if s.classification != Classification::Unresolved {
        return s;
    }
    let tighter = ToleranceConfig { epsilon: tol.epsilon / 10.0, ..*tol };
    multipliers_on_axis(sigma, graph, &tighter)
}

fn in_spectrum(sigma: f64, graph: &CayleyConfig, tol: &ToleranceConfig) -> bool {
    sample_with_retry(sigma, graph, tol).classification == Classification::Spectrum
}

/// Bisects `[a, b]` where `in_spectrum(a) != in_spectrum(b)` down to `width`
/// and returns the end lying in the spectrum.
fn bisect_edge(mut a: f64, mut b: f64, a_inside: bool, width: f64, graph: &CayleyConfig, tol: &ToleranceConfig) -> f64 {
    while b - a > width {
        let mid = 0.5 * (a + b);
        if in_spectrum(mid, graph, tol) == a_inside {
            a = mid;
        } else {
            b = mid;
        }
    }
    if a_inside {
        a
    } else {
        b
    }
}

/// Exceptional samples take the class of their neighbours when both
/// resolved neighbours lie in the spectrum.
fn effective_spectrum(samples: &[SpectralSample]) -> Vec<bool> {
    let n = samples.len();
    let resolved = |c: Classification| matches!(c, Classification::Resolvent | Classification::Spectrum);
    (0..n)
        .map(|i| match samples[i].classification {
            Classification::Spectrum => true,
            Classification::Exceptional => {
                let left = samples[..i].iter().rev().find(|s| resolved(s.classification));
                let right = samples[i + 1..].iter().find(|s| resolved(s.classification));
                matches!(
                    (left, right),
                    (Some(l), Some(r)) if l.classification == Classification::Spectrum
                        && r.classification == Classification::Spectrum
                )
            }
            _ => false,
        })
        .collect()
}

/// Samples `[σ_min, σ_max]`, classifies every point and returns the bands
/// with edges bisected to `1e−6 · (σ_max − σ_min)`.
pub fn scan_bands(
    sigma_min: f64,
    sigma_max: f64,
    points: usize,
    graph: &CayleyConfig,
    tol: &ToleranceConfig,
    abscissa: Abscissa,
) -> Result<(Vec<Band>, Vec<SpectralSample>)> {
    if !(sigma_min >= 0.0 && sigma_max > sigma_min) {
        return Err(Error::InvalidArgument(format!("bad range [{sigma_min}, {sigma_max}]")));
    }
    if points < 2 {
        return Err(Error::InvalidArgument("at least two grid points".into()));
    }
    let sigmas = grid(sigma_min, sigma_max, points, abscissa);
    let samples: Vec<SpectralSample> = sigmas.par_iter().map(|&s| sample_with_retry(s, graph, tol)).collect();
    let inside = effective_spectrum(&samples);
    let width = 1e-6 * (sigma_max - sigma_min);
    let mut runs = Vec::new();
    let mut i = 0;
    while i < points {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < points && inside[i + 1] {
            i += 1;
        }
        runs.push((start, i));
        i += 1;
    }
    let bands = runs
        .par_iter()
        .map(|&(a, b)| {
            let lower = if a == 0 {
                sigmas[0]
            } else {
                bisect_edge(sigmas[a - 1], sigmas[a], false, width, graph, tol)
            };
            let upper = if b + 1 == points {
                sigmas[b]
            } else {
                bisect_edge(sigmas[b], sigmas[b + 1], true, width, graph, tol)
            };
            let lo = a.saturating_sub(1);
            let hi = (b + 1).min(points - 1);
            let resolution = (sigmas[hi] - sigmas[lo]) / (hi - lo).max(1) as f64;
            Band { lower, upper, resolution }
        })
        .collect();
    Ok((bands, samples))
}

/// First spectral point of a graph with `q ≥ 0`, `M ≥ 2`, found by scanning
/// `[0, σ*]` and doubling `σ*` until a band appears. For equal free edges the
/// closed form is returned after comparing it with the scan.
pub fn spectral_lower_bound(graph: &CayleyConfig, points: usize, tol: &ToleranceConfig) -> Result<f64> {
    if !graph.supports_gap_claim() {
        return Err(Error::Unsupported("a spectral gap needs rank at least 2".into()));
    }
    let cap = 1e4 * graph.sup_potential().max(1.0);
    let mut top = 1.0;
    let scanned = loop {
        let (bands, _) = scan_bands(0.0, top, points, graph, tol, Abscissa::Sigma)?;
        if let Some(b) = bands.first() {
            break b.lower;
        }
        if top >= cap {
            return Err(Error::NoBandFound(cap));
        }
        top *= 2.0;
    };
    if graph.is_equal_length() && graph.is_potential_free() {
        let closed = equal_length_band_start(graph.rank(), graph.edges()[0].length());
        if (closed - scanned).abs() > 1e-4 * closed.max(1.0) {
            warn!("scanned band start {scanned} differs from closed form {closed}");
        }
        return Ok(closed);
    }
    Ok(scanned)
}

/// `(arccos(√(2M−1)/M) / l)²`, where `cos²(√σ l) = (2M−1)/M²` first holds.
pub fn equal_length_band_start(rank: usize, length: f64) -> f64 {
    let m = rank as f64;
    ((2.0 * m - 1.0).sqrt() / m).acos().powi(2) / (length * length)
}

/// Period in `√σ` of the multipliers of a free graph with rational lengths
/// `τ_m/η_m`: `2π Π η_m`.
pub fn sqrt_period(graph: &CayleyConfig) -> Result<f64> {
    if !graph.is_potential_free() {
        return Err(Error::Unsupported("periodicity needs zero potentials".into()));
    }
    let mut p = 2.0 * PI;
    for (m, e) in graph.edges().iter().enumerate() {
        let r = e
            .rational_length()
            .ok_or_else(|| Error::Unsupported(format!("edge {m} has no rational length")))?;
        p *= r.den as f64;
    }
    Ok(p)
}

/// `max |μ⁺_m((√σ + n p)²) − μ⁺_m(σ)|` over the samples. Exceptional or
/// unresolved samples are skipped.
pub fn periodicity_check(graph: &CayleyConfig, sigmas: &[f64], n: u32, tol: &ToleranceConfig) -> Result<f64> {
    let p = sqrt_period(graph)?;
    let worst = sigmas
        .par_iter()
        .map(|&s| {
            let a = multipliers_on_axis(s, graph, tol);
            let b = multipliers_on_axis((s.sqrt() + n as f64 * p).powi(2), graph, tol);
            let usable = |x: &SpectralSample| {
                matches!(x.classification, Classification::Resolvent | Classification::Spectrum)
            };
            if !usable(&a) || !usable(&b) {
                return 0.0;
            }
            a.mu_plus.iter().zip(&b.mu_plus).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}
