use num_complex::Complex64;

use super::{select_candidate, EndValues, MultiplierSet, MultiplierSource, ToleranceConfig};
use crate::error::{Error, Result};
use crate::graph::CayleyConfig;
use crate::sturm::end_pair;

/// Newton corrector iterations per path step.
const CORRECTOR_ITERATIONS: usize = 8;
/// Largest relative Newton update tolerated inside the corrector.
const MAX_RELATIVE_UPDATE: f64 = 0.3;
/// Stall threshold as a fraction of the path length.
const MIN_STEP: f64 = 1e-12;

/// Starting abscissa `−R` on the negative axis: far enough that the
/// asymptotic seed is accurate, small enough that `S_m` stays finite.
fn start_radius(graph: &CayleyConfig) -> f64 {
    let base = 100.0 * graph.sup_potential().max(1.0);
    let lengths = graph.edges().iter().map(|e| e.length());
    let lmin = lengths.clone().fold(f64::INFINITY, f64::min);
    let lmax = lengths.fold(0.0, f64::max);
    let wanted = (10.0 / lmin).powi(2);
    let ceiling = (600.0 / lmax).powi(2);
    base.max(wanted.min(ceiling))
}

/// `[−R, −R + iH, Re λ + iH, λ]` with `|H| ≥ 1` on the side of `λ`, or the
/// straight segment `[−R, λ]` for negative real targets.
pub fn default_path(graph: &CayleyConfig, target: Complex64) -> Result<Vec<Complex64>> {
    let r = start_radius(graph);
    let start = Complex64::new(-r, 0.0);
    if target.im == 0.0 {
        if target.re >= 0.0 {
            return Err(Error::InvalidPath(format!("target {target} lies on [0, ∞)")));
        }
        return Ok(vec![start, target]);
    }
    let h = target.im.signum() * target.im.abs().max(1.0);
    Ok(vec![start, Complex64::new(-r, h), Complex64::new(target.re, h), target])
}

fn validate_path(path: &[Complex64], target: Complex64) -> Result<()> {
    let (Some(first), Some(last)) = (path.first(), path.last()) else {
        return Err(Error::InvalidPath("empty path".into()));
    };
    if first.im != 0.0 || first.re >= 0.0 {
        return Err(Error::InvalidPath(format!("path must start on the negative axis, got {first}")));
    }
    if *last != target {
        return Err(Error::InvalidPath("path must end at the target".into()));
    }
    for (i, w) in path.windows(2).enumerate() {
        let endpoint_ok = i + 2 == path.len();
        if hits_positive_axis(w[0], w[1], endpoint_ok) {
            return Err(Error::InvalidPath(format!("segment {} → {} meets [0, ∞)", w[0], w[1])));
        }
    }
    Ok(())
}

fn hits_positive_axis(a: Complex64, b: Complex64, allow_end: bool) -> bool {
    let on_axis = |z: Complex64| z.im == 0.0 && z.re >= 0.0;
    if on_axis(a) || (on_axis(b) && !allow_end) {
        return true;
    }
    if a.im == 0.0 && b.im == 0.0 {
        // along the real axis: only the far end may touch [0, ∞)
        return a.re.max(b.re) >= 0.0 && !(allow_end && b.re >= 0.0 && a.re < 0.0);
    }
    if a.im * b.im < 0.0 {
        let t = a.im / (a.im - b.im);
        return a.re + t * (b.re - a.re) >= 0.0;
    }
    false
}

struct Polyline {
    points: Vec<Complex64>,
    cumulative: Vec<f64>,
}

impl Polyline {
    fn new(points: &[Complex64]) -> Self {
        let mut cumulative = vec![0.0];
        for w in points.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + (w[1] - w[0]).norm());
        }
        Polyline { points: points.to_vec(), cumulative }
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn at(&self, s: f64) -> Complex64 {
        if s >= self.length() {
            return *self.points.last().unwrap();
        }
        let i = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        if seg == 0.0 {
            return self.points[i];
        }
        let t = (s - self.cumulative[i]) / seg;
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }
}

fn max_relative(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

/// Newton on the normalized system from `guess`; `None` when an update is
/// too large or the iteration does not settle.
fn correct(ends: &EndValues, guess: &[Complex64], iterations: usize) -> Option<Vec<Complex64>> {
    let mut mu = guess.to_vec();
    for _ in 0..iterations {
        let next = ends.newton_step(&mu)?;
        let rel = max_relative(&next, &mu);
        mu = next;
        if rel > MAX_RELATIVE_UPDATE {
            return None;
        }
        if rel < 1e-13 {
            return Some(mu);
        }
    }
    (ends.scaled_residual(&mu) < 1e-12).then_some(mu)
}

/// Asymptotic seed `μ_m ≈ i / (2M √λ S_m(l_m, λ))` at a point far out on
/// the negative axis.
fn seed(graph: &CayleyConfig, lambda: Complex64) -> Vec<Complex64> {
    let m = graph.rank() as f64;
    let root = lambda.sqrt();
    graph
        .edges()
        .iter()
        .map(|e| Complex64::new(0.0, 1.0) / (root * end_pair(e, lambda).s * (2.0 * m)))
        .collect()
}

/// Tracks the decaying solution from the start of `path` to `target` with a
/// secant predictor and Newton corrector, halving the step on failure.
pub fn continuation_solve(graph: &CayleyConfig, target: Complex64, path: &[Complex64]) -> Result<MultiplierSet> {
    validate_path(path, target)?;
    let line = Polyline::new(path);
    let total = line.length();
    let start = path[0];
    let ends = EndValues::at(graph, start);
    let mut mu = correct(&ends, &seed(graph, start), 50).ok_or(Error::PathStall(start))?;
    let mut s = 0.0;
    let mut prev: Option<(f64, Vec<Complex64>)> = None;
    let max_step = total / 16.0;
    let mut ds = total / 64.0;
    while s < total {
        let s_next = (s + ds).min(total);
        let lam = line.at(s_next);
        let ends = EndValues::at(graph, lam);
        let predicted: Vec<Complex64> = match &prev {
            Some((sp, mp)) => {
                let f = (s_next - s) / (s - sp);
                mu.iter().zip(mp).map(|(&a, &b)| a + (a - b) * f).collect()
            }
            None => mu.clone(),
        };
        let corrected = correct(&ends, &predicted, CORRECTOR_ITERATIONS)
            .filter(|c| max_relative(c, &mu) < 0.5 && c.iter().all(|x| x.norm() <= 1.0 + 1e-9));
        match corrected {
            Some(next) => {
                prev = Some((s, std::mem::replace(&mut mu, next)));
                s = s_next;
                ds = (ds * 1.5).min(max_step);
            }
            None => {
                ds /= 2.0;
                if ds < MIN_STEP * total {
                    return Err(Error::PathStall(lam));
                }
            }
        }
    }
    let ends = EndValues::at(graph, target);
    let tol = ToleranceConfig::default();
    select_candidate(target, &ends, vec![mu], MultiplierSource::Continuation, &tol)
}
