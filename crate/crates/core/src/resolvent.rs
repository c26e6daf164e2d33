//! Resolvent kernel on the tree built from the multipliers.
//!
//! On an edge of type `m`, parametrized from the end nearer the identity,
//! `y₊ = C + a S` decays into the far half tree with `y₊(0) = 1`,
//! `y₊(l) = μ_m`, and `y₋ = μ_m C + b S` decays into the near half tree
//! with `y₋(l) = 1`, `y₋(0) = μ_m`. Beyond the edge both continue with one
//! factor `μ_k` per traversed edge of type `k`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{ball_edges, first_cancellation, CayleyConfig, EdgeSpec, Letter, TreeEdge, Word};
use crate::multiplier::MultiplierSet;
use crate::sturm::{end_pair, fundamental_pair, fundamental_pairs, FundamentalPair};

const DIVISOR_FLOOR: f64 = 1e-14;

/// Product of `μ_k` over the letters of a reduced word.
pub fn vertex_value(letters: &[Letter], mu: &[Complex64]) -> Result<Complex64> {
    if let Some(i) = first_cancellation(letters) {
        return Err(Error::NonReducedWord(i));
    }
    letters.iter().try_fold(Complex64::new(1.0, 0.0), |acc, l| {
        mu.get(l.generator())
            .map(|&m| acc * m)
            .ok_or(Error::GeneratorOutOfRange { index: l.generator(), rank: mu.len() })
    })
}

/// Product of multipliers along the tree path from `a` to `b`.
fn path_factor(a: &Word, b: &Word, mu: &[Complex64]) -> Complex64 {
    a.inverse().concat(b).letters().iter().map(|l| mu[l.generator()]).product()
}

fn interpolate_with(alpha: Complex64, beta: Complex64, end: &FundamentalPair, at: &FundamentalPair) -> (Complex64, Complex64) {
    let k = (beta - alpha * end.c) / end.s;
    (alpha * at.c + k * at.s, alpha * at.c_prime + k * at.s_prime)
}

/// The solution on `[0, l]` with `y(0) = α`, `y(l) = β`, evaluated at `x`.
pub fn edge_interpolate(
    alpha: Complex64,
    beta: Complex64,
    edge: &EdgeSpec,
    lambda: Complex64,
    x: f64,
) -> Result<Complex64> {
    let end = end_pair(edge, lambda);
    if end.s.norm() < DIVISOR_FLOOR {
        return Err(Error::Exceptional(lambda));
    }
    let at = fundamental_pair(edge, lambda, x)?;
    Ok(interpolate_with(alpha, beta, &end, &at).0)
}

/// `W = y₋' y₊ − y₋ y₊' = (1 − μ²)/S(l, λ)`.
pub fn wronskian(mu: Complex64, edge: &EdgeSpec, lambda: Complex64) -> Result<Complex64> {
    let s = end_pair(edge, lambda).s;
    if s.norm() < DIVISOR_FLOOR {
        return Err(Error::Exceptional(lambda));
    }
    let num = 1.0 - mu * mu;
    if num.norm() < DIVISOR_FLOOR {
        return Err(Error::NearZeroDivisor("1 − μ²"));
    }
    Ok(num / s)
}

/// Coefficients of `y₊`, `y₋` on one edge type.
#[derive(Clone, Copy, Debug)]
struct Branches {
    mu: Complex64,
    a: Complex64,
    b: Complex64,
    w: Complex64,
}

impl Branches {
    fn new(mu: Complex64, edge: &EdgeSpec, lambda: Complex64) -> Result<Self> {
        let end = end_pair(edge, lambda);
        let w = wronskian(mu, edge, lambda)?;
        Ok(Branches { mu, a: (mu - end.c) / end.s, b: (1.0 - mu * end.c) / end.s, w })
    }

    fn plus(&self, p: &FundamentalPair) -> (Complex64, Complex64) {
        (p.c + self.a * p.s, p.c_prime + self.a * p.s_prime)
    }

    fn minus(&self, p: &FundamentalPair) -> (Complex64, Complex64) {
        (self.mu * p.c + self.b * p.s, self.mu * p.c_prime + self.b * p.s_prime)
    }
}

/// Kernel of the resolvent restricted to one edge of type `m`:
/// `y₋(min(x,t)) y₊(max(x,t)) / W`.
pub fn kernel_eval(graph: &CayleyConfig, m: usize, x: f64, t: f64, set: &MultiplierSet) -> Result<Complex64> {
    let edge = graph.edge(m)?;
    let mu = *set.mu.get(m).ok_or(Error::RankMismatch { expected: graph.rank(), actual: set.mu.len() })?;
    let br = Branches::new(mu, edge, set.lambda)?;
    let (lo, hi) = if x <= t { (x, t) } else { (t, x) };
    let p_lo = fundamental_pair(edge, set.lambda, lo)?;
    let p_hi = fundamental_pair(edge, set.lambda, hi)?;
    Ok(br.minus(&p_lo).0 * br.plus(&p_hi).0 / br.w)
}

/// A load `f` on a single edge, addressed by the far endpoint of the edge
/// (the endpoint farther from the identity).
#[derive(Clone)]
pub struct EdgeLoad {
    pub edge: Word,
    f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl fmt::Debug for EdgeLoad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeLoad").field("edge", &self.edge).finish_non_exhaustive()
    }
}

impl EdgeLoad {
    pub fn new(edge: Word, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        EdgeLoad { edge, f: Arc::new(f) }
    }

    /// Samples on a uniform grid over `[0, length]`, linearly interpolated.
    pub fn sampled(edge: Word, length: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument("a sampled load needs at least two values".into()));
        }
        let n = values.len() - 1;
        Ok(EdgeLoad::new(edge, move |x| {
            let u = (x / length * n as f64).clamp(0.0, n as f64);
            let i = (u.floor() as usize).min(n - 1);
            let t = u - i as f64;
            values[i] * (1.0 - t) + values[i + 1] * t
        }))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }
}

/// Green-function solution of one load on its own edge, tabulated on a
/// Simpson grid.
struct LoadSolution {
    edge: usize,
    load: EdgeLoad,
    branches: Branches,
    length: f64,
    /// even Simpson nodes
    nodes: Vec<f64>,
    /// `∫_0^x y₋ f` at even nodes
    left: Vec<Complex64>,
    /// `∫_x^l y₊ f` at even nodes
    right: Vec<Complex64>,
}

impl LoadSolution {
    fn new(edge: usize, load: EdgeLoad, spec: &EdgeSpec, lambda: Complex64, mu: Complex64, panels: usize) -> Result<Self> {
        let branches = Branches::new(mu, spec, lambda)?;
        let length = spec.length();
        let grid: Vec<f64> = (0..=2 * panels).map(|j| length * j as f64 / (2 * panels) as f64).collect();
        let pairs = fundamental_pairs(spec, lambda, &grid)?;
        let fv: Vec<Complex64> = grid.iter().map(|&x| load.eval(x)).collect();
        let gm: Vec<Complex64> = pairs.iter().zip(&fv).map(|(p, f)| branches.minus(p).0 * f).collect();
        let gp: Vec<Complex64> = pairs.iter().zip(&fv).map(|(p, f)| branches.plus(p).0 * f).collect();
        let h = length / (2 * panels) as f64;
        let simpson = |g: &[Complex64], i: usize| (g[2 * i] + g[2 * i + 1] * 4.0 + g[2 * i + 2]) * (h / 3.0);
        let mut left = vec![Complex64::new(0.0, 0.0); panels + 1];
        for i in 0..panels {
            left[i + 1] = left[i] + simpson(&gm, i);
        }
        let mut right = vec![Complex64::new(0.0, 0.0); panels + 1];
        for i in (0..panels).rev() {
            right[i] = right[i + 1] + simpson(&gp, i);
        }
        let nodes = (0..=panels).map(|i| grid[2 * i]).collect();
        Ok(LoadSolution { edge, load, branches, length, nodes, left, right })
    }

    /// Coefficient of `y₊` beyond the far end.
    fn far_coefficient(&self) -> Complex64 {
        self.left[self.left.len() - 1] / self.branches.w
    }

    /// Coefficient of `y₋` beyond the near end.
    fn near_coefficient(&self) -> Complex64 {
        self.right[0] / self.branches.w
    }

    /// `(∫_0^x y₋ f, ∫_x^l y₊ f)`, finishing the partial panel with Simpson.
    fn integrals(&self, spec: &EdgeSpec, lambda: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
        let i = self.nodes.partition_point(|&n| n <= x).saturating_sub(1).min(self.nodes.len() - 1);
        let xa = self.nodes[i];
        if (x - xa).abs() <= 1e-14 * self.length {
            return Ok((self.left[i], self.right[i]));
        }
        let mid = 0.5 * (xa + x);
        let pts = fundamental_pairs(spec, lambda, &[xa, mid, x])?;
        let w = (x - xa) / 6.0;
        let part = |g: &dyn Fn(&FundamentalPair) -> Complex64| {
            (g(&pts[0]) * self.load.eval(xa) + g(&pts[1]) * self.load.eval(mid) * 4.0 + g(&pts[2]) * self.load.eval(x)) * w
        };
        let dl = part(&|p| self.branches.minus(p).0);
        let dr = part(&|p| self.branches.plus(p).0);
        Ok((self.left[i] + dl, self.right[i] - dr))
    }

    fn value_and_slope(&self, spec: &EdgeSpec, lambda: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
        let (il, ir) = self.integrals(spec, lambda, x)?;
        let p = fundamental_pair(spec, lambda, x)?;
        let (yp, dyp) = self.branches.plus(&p);
        let (ym, dym) = self.branches.minus(&p);
        let w = self.branches.w;
        Ok(((yp * il + ym * ir) / w, (dyp * il + dym * ir) / w))
    }
}

/// `h = Σ_e ∫ R_e(·, t, λ) f_e(t) dt` on every edge of a ball around the
/// identity.
pub struct TreeFunction {
    graph: CayleyConfig,
    lambda: Complex64,
    mu: Vec<Complex64>,
    depth: usize,
    edges: Vec<TreeEdge>,
    index: HashMap<Word, usize>,
    /// endpoint values from loads on other edges
    hom_near: Vec<Complex64>,
    hom_far: Vec<Complex64>,
    own: HashMap<usize, Vec<LoadSolution>>,
}

impl fmt::Debug for TreeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TreeFunction")
            .field("lambda", &self.lambda)
            .field("depth", &self.depth)
            .field("edges", &self.edges.len())
            .finish_non_exhaustive()
    }
}

/// Applies the resolvent to edge loads, truncating at `depth` generations.
/// `panels` Simpson panels are used on each loaded edge.
pub fn apply_resolvent(
    graph: &CayleyConfig,
    set: &MultiplierSet,
    loads: &[EdgeLoad],
    depth: usize,
    panels: usize,
) -> Result<TreeFunction> {
    if set.mu.len() != graph.rank() {
        return Err(Error::RankMismatch { expected: graph.rank(), actual: set.mu.len() });
    }
    if panels < 2 {
        return Err(Error::InvalidArgument("at least two quadrature panels".into()));
    }
    let edges = ball_edges(graph.rank(), depth);
    let index: HashMap<Word, usize> = edges.iter().enumerate().map(|(i, e)| (e.far.clone(), i)).collect();
    let lambda = set.lambda;
    let mu = &set.mu;
    let mut solutions = Vec::with_capacity(loads.len());
    for load in loads {
        let &i = index
            .get(&load.edge)
            .ok_or_else(|| Error::InvalidArgument(format!("load on {} lies beyond depth {depth}", load.edge)))?;
        let g = edges[i].generator;
        solutions.push(LoadSolution::new(i, load.clone(), graph.edge(g)?, lambda, mu[g], panels)?);
    }
    let mut hom_near = vec![Complex64::new(0.0, 0.0); edges.len()];
    let mut hom_far = hom_near.clone();
    for sol in &solutions {
        let src = &edges[sol.edge];
        let k = mu[src.generator];
        let a_far = sol.far_coefficient() * k;
        let a_near = sol.near_coefficient() * k;
        for (j, e) in edges.iter().enumerate() {
            if j == sol.edge {
                continue;
            }
            let step = mu[e.generator];
            if e.near.starts_with(&src.far) {
                let v = a_far * path_factor(&src.far, &e.near, mu);
                hom_near[j] += v;
                hom_far[j] += v * step;
            } else if src.near.starts_with(&e.far) {
                let v = a_near * path_factor(&src.near, &e.far, mu);
                hom_far[j] += v;
                hom_near[j] += v * step;
            } else {
                let v = a_near * path_factor(&src.near, &e.near, mu);
                hom_near[j] += v;
                hom_far[j] += v * step;
            }
        }
    }
    let mut own: HashMap<usize, Vec<LoadSolution>> = HashMap::new();
    for sol in solutions {
        own.entry(sol.edge).or_default().push(sol);
    }
    Ok(TreeFunction {
        graph: graph.clone(),
        lambda,
        mu: mu.clone(),
        depth,
        edges,
        index,
        hom_near,
        hom_far,
        own,
    })
}

impl TreeFunction {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn edge_index(&self, far: &Word) -> Option<usize> {
        self.index.get(far).copied()
    }

    /// Value and derivative at `x` on edge `i`, with `x` measured from the
    /// near endpoint.
    pub fn value_and_slope(&self, i: usize, x: f64) -> Result<(Complex64, Complex64)> {
        let e = self.edges.get(i).ok_or_else(|| Error::InvalidArgument(format!("no edge {i}")))?;
        let spec = self.graph.edge(e.generator)?;
        let end = end_pair(spec, self.lambda);
        let at = fundamental_pair(spec, self.lambda, x)?;
        let (mut v, mut d) = interpolate_with(self.hom_near[i], self.hom_far[i], &end, &at);
        if let Some(list) = self.own.get(&i) {
            for sol in list {
                let (pv, pd) = sol.value_and_slope(spec, self.lambda, x)?;
                v += pv;
                d += pd;
            }
        }
        Ok((v, d))
    }

    pub fn value(&self, i: usize, x: f64) -> Result<Complex64> {
        Ok(self.value_and_slope(i, x)?.0)
    }

    /// Values at the near and far endpoint of edge `i`.
    pub fn endpoint_values(&self, i: usize) -> Result<(Complex64, Complex64)> {
        let l = self.graph.edge(self.edges[i].generator)?.length();
        Ok((self.value(i, 0.0)?, self.value(i, l)?))
    }

    /// Value at a vertex, read from the edge ending there (or, for the
    /// identity, from the first edge leaving it).
    pub fn vertex_value(&self, w: &Word) -> Result<Complex64> {
        if w.is_empty() {
            return self.value(0, 0.0);
        }
        let i = self.edge_index(w).ok_or_else(|| Error::InvalidArgument(format!("vertex {w} beyond depth")))?;
        let l = self.graph.edge(self.edges[i].generator)?.length();
        self.value(i, l)
    }

    /// Largest `|Σ ∂_ν h|` over vertices at distance below the depth.
    pub fn kirchhoff_residual(&self) -> Result<f64> {
        let mut sums: HashMap<&Word, Complex64> = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            let l = self.graph.edge(e.generator)?.length();
            let (_, d0) = self.value_and_slope(i, 0.0)?;
            *sums.entry(&e.near).or_default() += d0;
            if e.far.len() < self.depth {
                let (_, dl) = self.value_and_slope(i, l)?;
                *sums.entry(&e.far).or_default() -= dl;
            }
        }
        Ok(sums.values().map(|s| s.norm()).fold(0.0, f64::max))
    }

    /// Largest `|−h'' + (q − λ) h − f|` at `points` interior points of every
    /// edge, with `h''` from centered second differences of step
    /// `step · l`, divided by `max(1, sup |f|)`.
    pub fn ode_defect(&self, points: usize, step: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut fmax: f64 = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            let spec = self.graph.edge(e.generator)?;
            let l = spec.length();
            let d = step * l;
            for j in 1..=points {
                let x = d + (l - 2.0 * d) * j as f64 / (points + 1) as f64;
                let hm = self.value(i, x - d)?;
                let h0 = self.value(i, x)?;
                let hp = self.value(i, x + d)?;
                let f: Complex64 = self.own.get(&i).map_or(Complex64::new(0.0, 0.0), |list| {
                    list.iter().map(|s| s.load.eval(x)).sum()
                });
                fmax = fmax.max(f.norm());
                let second = (hp - h0 * 2.0 + hm) / (d * d);
                let defect = -second + (spec.q(x) - self.lambda) * h0 - f;
                worst = worst.max(defect.norm());
            }
        }
        Ok(worst / fmax.max(1.0))
    }

    /// Largest deviation of far/near endpoint ratios from `μ` over edges
    /// that carry no load and do not lie between a load and the identity.
    pub fn max_ratio_error(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, e) in self.edges.iter().enumerate() {
            if self.own.contains_key(&i) {
                continue;
            }
            let ancestor = self.own.keys().any(|&j| self.edges[j].near.starts_with(&e.far));
            if ancestor {
                continue;
            }
            let (a, b) = self.endpoint_values(i)?;
            if a.norm() > 0.0 {
                worst = worst.max((b / a - self.mu[e.generator]).norm());
            }
        }
        Ok(worst)
    }
}
