//! Fundamental solutions `C(x, λ)`, `S(x, λ)` of `-y'' + q y = λ y` on a
//! single edge, with `C(0) = S'(0) = 1` and `C'(0) = S(0) = 0`.
//!
//! Zero, constant and piecewise-constant potentials use exact
//! trigonometric transfer matrices. Sampled potentials are integrated with
//! fixed-step RK4 on a step grid aligned with the samples, so the result is
//! bit-reproducible.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{EdgeSpec, PotentialSpec};

const SERIES_CUTOFF: f64 = 1e-4;
/// Upper bound on the RK4 step as a fraction of the edge length.
const MIN_STEPS_PER_EDGE: usize = 2000;
/// Upper bound on `|ω| h` for one RK4 step.
const MAX_PHASE_PER_STEP: f64 = 0.005;

/// Values of the basis solutions and their derivatives at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalPair {
    pub c: Complex64,
    pub c_prime: Complex64,
    pub s: Complex64,
    pub s_prime: Complex64,
}

impl FundamentalPair {
    pub const IDENTITY: FundamentalPair = FundamentalPair {
        c: Complex64::new(1.0, 0.0),
        c_prime: Complex64::new(0.0, 0.0),
        s: Complex64::new(0.0, 0.0),
        s_prime: Complex64::new(1.0, 0.0),
    };

    pub fn wronskian(&self) -> Complex64 {
        self.c * self.s_prime - self.c_prime * self.s
    }

    pub fn conj(&self) -> Self {
        FundamentalPair {
            c: self.c.conj(),
            c_prime: self.c_prime.conj(),
            s: self.s.conj(),
            s_prime: self.s_prime.conj(),
        }
    }

    /// Matrix product `self * rhs`, both read as `[[C, S], [C', S']]`.
    fn compose(&self, rhs: &FundamentalPair) -> FundamentalPair {
        FundamentalPair {
            c: self.c * rhs.c + self.s * rhs.c_prime,
            s: self.c * rhs.s + self.s * rhs.s_prime,
            c_prime: self.c_prime * rhs.c + self.s_prime * rhs.c_prime,
            s_prime: self.c_prime * rhs.s + self.s_prime * rhs.s_prime,
        }
    }
}

/// `(cos(ωx), sin(ωx)/(ωx))` as functions of `u2 = ω²x²`, so the branch of
/// `ω` never matters.
fn cos_sinc(z: Complex64, x: f64) -> (Complex64, Complex64) {
    let u2 = z * (x * x);
    if u2.norm() < SERIES_CUTOFF * SERIES_CUTOFF {
        let cos = 1.0 - u2 / 2.0 + u2 * u2 / 24.0;
        let sinc = 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
        (cos, sinc)
    } else {
        let u = z.sqrt() * x;
        (u.cos(), u.sin() / u)
    }
}

/// Transfer matrix across a segment of width `x` with constant potential `c`.
fn constant_segment(lambda: Complex64, c: f64, x: f64) -> FundamentalPair {
    let z = lambda - c;
    let (cos, sinc) = cos_sinc(z, x);
    FundamentalPair { c: cos, c_prime: -z * x * sinc, s: sinc * x, s_prime: cos }
}

fn piecewise(lambda: Complex64, values: &[f64], length: f64, x: f64) -> FundamentalPair {
    let width = length / values.len() as f64;
    let mut acc = FundamentalPair::IDENTITY;
    let mut start = 0.0;
    for (j, &c) in values.iter().enumerate() {
        let end = if j + 1 == values.len() { length } else { (j + 1) as f64 * width };
        if x <= start {
            break;
        }
        let t = x.min(end) - start;
        acc = constant_segment(lambda, c, t).compose(&acc);
        start = end;
    }
    acc
}

struct SampledIntegrator<'a> {
    values: &'a [f64],
    lambda: Complex64,
    interval: f64,
    substeps: usize,
}

impl<'a> SampledIntegrator<'a> {
    fn new(values: &'a [f64], length: f64, lambda: Complex64) -> Self {
        let n = values.len() - 1;
        let interval = length / n as f64;
        let sup = values.iter().cloned().fold(0.0, f64::max);
        let omega = (lambda.norm() + sup).sqrt();
        let by_edge = MIN_STEPS_PER_EDGE.div_ceil(n);
        let by_phase = (omega * interval / MAX_PHASE_PER_STEP).ceil() as usize;
        SampledIntegrator { values, lambda, interval, substeps: by_edge.max(by_phase).max(1) }
    }

    /// Potential on sample interval `i`, linear in the local offset.
    fn q(&self, i: usize, offset: f64) -> f64 {
        let a = self.values[i];
        let b = self.values[i + 1];
        a + (b - a) * (offset / self.interval)
    }

    /// One RK4 step of `Y' = [[0,1],[q-λ,0]] Y` inside interval `i`.
    fn step(&self, y: &FundamentalPair, i: usize, t0: f64, h: f64) -> FundamentalPair {
        let rhs = |y: &FundamentalPair, t: f64| {
            let k = self.q(i, t) - self.lambda;
            FundamentalPair { c: y.c_prime, s: y.s_prime, c_prime: k * y.c, s_prime: k * y.s }
        };
        let axpy = |y: &FundamentalPair, a: f64, d: &FundamentalPair| FundamentalPair {
            c: y.c + d.c * a,
            s: y.s + d.s * a,
            c_prime: y.c_prime + d.c_prime * a,
            s_prime: y.s_prime + d.s_prime * a,
        };
        let k1 = rhs(y, t0);
        let k2 = rhs(&axpy(y, h / 2.0, &k1), t0 + h / 2.0);
        let k3 = rhs(&axpy(y, h / 2.0, &k2), t0 + h / 2.0);
        let k4 = rhs(&axpy(y, h, &k3), t0 + h);
        FundamentalPair {
            c: y.c + (k1.c + (k2.c + k3.c) * 2.0 + k4.c) * (h / 6.0),
            s: y.s + (k1.s + (k2.s + k3.s) * 2.0 + k4.s) * (h / 6.0),
            c_prime: y.c_prime + (k1.c_prime + (k2.c_prime + k3.c_prime) * 2.0 + k4.c_prime) * (h / 6.0),
            s_prime: y.s_prime + (k1.s_prime + (k2.s_prime + k3.s_prime) * 2.0 + k4.s_prime) * (h / 6.0),
        }
    }

    fn advance_interval(&self, y: FundamentalPair, i: usize, upto: f64) -> FundamentalPair {
        if upto <= 0.0 {
            return y;
        }
        let steps = ((self.substeps as f64) * upto / self.interval).ceil().max(1.0) as usize;
        let h = upto / steps as f64;
        let mut y = y;
        for s in 0..steps {
            y = self.step(&y, i, s as f64 * h, h);
        }
        y
    }

    /// Values at each of the (ascending) points `xs`.
    fn run(&self, xs: &[f64]) -> Vec<FundamentalPair> {
        let n = self.values.len() - 1;
        let mut out = Vec::with_capacity(xs.len());
        // state at the left end of interval `i`
        let mut i = 0usize;
        let mut y = FundamentalPair::IDENTITY;
        for &x in xs {
            let target = ((x / self.interval).floor() as usize).min(n - 1);
            while i < target {
                y = self.advance_interval(y, i, self.interval);
                i += 1;
            }
            let offset = x - i as f64 * self.interval;
            out.push(self.advance_interval(y, i, offset));
        }
        out
    }
}

fn check_range(edge: &EdgeSpec, x: f64) -> Result<()> {
    if !(0.0..=edge.length()).contains(&x) {
        return Err(Error::OutOfRange { x, length: edge.length() });
    }
    Ok(())
}

/// `C, C', S, S'` at `x ∈ [0, l]` for complex `λ`.
pub fn fundamental_pair(edge: &EdgeSpec, lambda: Complex64, x: f64) -> Result<FundamentalPair> {
    check_range(edge, x)?;
    Ok(pair_unchecked(edge, lambda, x))
}

fn pair_unchecked(edge: &EdgeSpec, lambda: Complex64, x: f64) -> FundamentalPair {
    match edge.potential() {
        PotentialSpec::Zero => constant_segment(lambda, 0.0, x),
        PotentialSpec::Constant(c) => constant_segment(lambda, *c, x),
        PotentialSpec::PiecewiseConstant(v) => piecewise(lambda, v, edge.length(), x),
        PotentialSpec::Sampled(v) => SampledIntegrator::new(v, edge.length(), lambda).run(&[x])[0],
    }
}

/// Batch evaluation at ascending points; sampled potentials integrate once
/// through the whole list.
pub fn fundamental_pairs(edge: &EdgeSpec, lambda: Complex64, xs: &[f64]) -> Result<Vec<FundamentalPair>> {
    for w in xs.windows(2) {
        if w[1] < w[0] {
            return Err(Error::InvalidArgument("points must be ascending".into()));
        }
    }
    for &x in xs {
        check_range(edge, x)?;
    }
    Ok(match edge.potential() {
        PotentialSpec::Sampled(v) => SampledIntegrator::new(v, edge.length(), lambda).run(xs),
        _ => xs.iter().map(|&x| pair_unchecked(edge, lambda, x)).collect(),
    })
}

/// Values at the far end `x = l`.
pub fn end_pair(edge: &EdgeSpec, lambda: Complex64) -> FundamentalPair {
    pair_unchecked(edge, lambda, edge.length())
}

/// True when `σ` is within `tol` of the Dirichlet spectrum of the edge,
/// i.e. `|S(l, σ)| < tol`.
pub fn sturm_zero_near(edge: &EdgeSpec, sigma: f64, tol: f64) -> bool {
    end_pair(edge, Complex64::new(sigma, 0.0)).s.norm() < tol
}
