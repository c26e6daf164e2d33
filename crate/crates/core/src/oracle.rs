//! Finite-difference model of the operator on a ball of the tree with
//! Dirichlet conditions at the leaves.
//!
//! Each edge of type `m` is cut into `mesh` segments of width
//! `h_m = l_m / mesh`. Linear elements with lumped mass give the stiffness
//! `K` (entries `±1/h` per segment), the diagonal mass `M` (`h` at interior
//! points, `Σ h_e / 2` at vertices) and the potential term `Q = M q`. The
//! discrete operator is `M⁻¹(K + Q)`; continuity is built in and the vertex
//! rows carry the Kirchhoff condition.
//!
//! The node graph is itself a tree, so Gaussian elimination from the leaves
//! inward produces no fill. That gives an exact inertia count for
//! `K + Q − σM` (bisection for eigenvalues) and a linear-time direct solver.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{ball_edges, CayleyConfig, Letter, TreeEdge, Word};
use crate::multiplier::MultiplierSet;
use crate::resolvent::{apply_resolvent, EdgeLoad};
use crate::spectrum::Band;

/// Largest number of unknowns the oracle will assemble.
pub const SIZE_CAP: usize = 5_000_000;
const NO_PARENT: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct TruncatedTree {
    pub depth: usize,
    pub mesh: usize,
    pub rank: usize,
    pub vertices: Vec<Word>,
    pub edges: Vec<TreeEdge>,
}

impl TruncatedTree {
    /// Unknowns after removing the Dirichlet leaves.
    pub fn dimension(&self) -> usize {
        let leaves = self.edges.iter().filter(|e| e.level == self.depth).count();
        self.vertices.len() - leaves + self.edges.len() * (self.mesh - 1)
    }

    pub fn is_leaf(&self, w: &Word) -> bool {
        w.len() == self.depth
    }
}

pub fn build_truncated(graph: &CayleyConfig, depth: usize, mesh: usize) -> Result<TruncatedTree> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if mesh < 16 {
        return Err(Error::InvalidArgument(format!("mesh must be at least 16, got {mesh}")));
    }
    let rank = graph.rank();
    let branching = (2 * rank - 1) as f64;
    let edge_count = 2.0 * rank as f64 * (0..depth).map(|n| branching.powi(n as i32)).sum::<f64>();
    let estimate = edge_count * mesh as f64;
    if estimate > SIZE_CAP as f64 {
        return Err(Error::SizeCap(estimate as usize));
    }
    let edges = ball_edges(rank, depth);
    let vertices = std::iter::once(Word::identity()).chain(edges.iter().map(|e| e.far.clone())).collect();
    Ok(TruncatedTree { depth, mesh, rank, vertices, edges })
}

/// Symmetric tridiagonal-on-a-tree matrix `K + Q` with diagonal mass `M`.
/// Node 0 is the identity vertex; every node's parent has a smaller index.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    diag: Vec<f64>,
    /// entry coupling a node to its parent
    off: Vec<f64>,
    parent: Vec<usize>,
    mass: Vec<f64>,
    potential: Vec<f64>,
    vertex_nodes: HashMap<Word, usize>,
    /// node per mesh point of each edge, near end first; `None` at leaves
    edge_nodes: Vec<Vec<Option<usize>>>,
    edge_steps: Vec<f64>,
}

impl DiscreteOperator {
    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn vertex_node(&self, w: &Word) -> Option<usize> {
        self.vertex_nodes.get(w).copied()
    }

    pub fn edge_nodes(&self, edge: usize) -> &[Option<usize>] {
        &self.edge_nodes[edge]
    }

    /// Nonzero entries `(i, j, value)` of `K + Q`, both triangles.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> = self.diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        for (i, (&p, &o)) in self.parent.iter().zip(&self.off).enumerate() {
            if p != NO_PARENT {
                out.push((i, p, o));
                out.push((p, i, o));
            }
        }
        out
    }

    /// `M⁻¹(K + Q) u`, the discrete `−D² + q`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(u).map(|(d, x)| d * x).collect();
        for (i, (&p, &o)) in self.parent.iter().zip(&self.off).enumerate() {
            if p != NO_PARENT {
                out[i] += o * u[p];
                out[p] += o * u[i];
            }
        }
        out.iter_mut().zip(&self.mass).for_each(|(x, m)| *x /= m);
        out
    }

    /// Number of eigenvalues of `M⁻¹(K + Q)` below `sigma` (Sylvester
    /// inertia of `K + Q − σM`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.dimension();
        let mut acc = vec![0.0; n];
        let mut negative = 0;
        for i in (0..n).rev() {
            let mut d = self.diag[i] - sigma * self.mass[i] - acc[i];
            if d == 0.0 {
                d = -f64::EPSILON * self.diag[i].abs().max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                negative += 1;
            }
            let p = self.parent[i];
            if p != NO_PARENT {
                acc[p] += self.off[i] * self.off[i] / d;
            }
        }
        negative
    }

    /// Gershgorin interval for the eigenvalues.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.dimension()];
        for (i, (&p, &o)) in self.parent.iter().zip(&self.off).enumerate() {
            if p != NO_PARENT {
                radius[i] += o.abs();
                radius[p] += o.abs();
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dimension() {
            lo = lo.min((self.diag[i] - radius[i]) / self.mass[i]);
            hi = hi.max((self.diag[i] + radius[i]) / self.mass[i]);
        }
        (lo, hi)
    }

    /// Solves `(K + Q − λM) u = rhs` by elimination from the leaves.
    pub fn solve_shifted(&self, lambda: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dimension();
        if rhs.len() != n {
            return Err(Error::InvalidArgument(format!("right-hand side has {} entries, need {n}", rhs.len())));
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = vec![zero; n];
        let mut acc_rhs = vec![zero; n];
        let mut pivots = vec![zero; n];
        let mut reduced = vec![zero; n];
        for i in (0..n).rev() {
            let d = self.diag[i] - lambda * self.mass[i] - acc[i];
            if d.norm() < 1e-300 {
                return Err(Error::NoConvergence(format!("zero pivot at node {i}")));
            }
            let b = rhs[i] - acc_rhs[i];
            pivots[i] = d;
            reduced[i] = b;
            let p = self.parent[i];
            if p != NO_PARENT {
                acc[p] += self.off[i] * self.off[i] / d;
                acc_rhs[p] += self.off[i] * b / d;
            }
        }
        let mut u = vec![zero; n];
        for i in 0..n {
            let p = self.parent[i];
            let coupled = if p == NO_PARENT { zero } else { u[p] * self.off[i] };
            u[i] = (reduced[i] - coupled) / pivots[i];
        }
        Ok(u)
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
}

pub fn assemble(tree: &TruncatedTree, graph: &CayleyConfig) -> Result<DiscreteOperator> {
    if graph.rank() != tree.rank {
        return Err(Error::RankMismatch { expected: tree.rank, actual: graph.rank() });
    }
    let n = tree.dimension();
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    let mut parent = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    let mut vertex_nodes = HashMap::new();
    let mut edge_nodes = Vec::with_capacity(tree.edges.len());
    let mut edge_steps = Vec::with_capacity(tree.edges.len());

    vertex_nodes.insert(Word::identity(), 0);
    diag.push(0.0);
    off.push(0.0);
    parent.push(NO_PARENT);
    mass.push(0.0);
    potential.push(0.0);

    for e in &tree.edges {
        let spec = graph.edge(e.generator)?;
        let l = spec.length();
        let h = l / tree.mesh as f64;
        edge_steps.push(h);
        let near = *vertex_nodes
            .get(&e.near)
            .ok_or_else(|| Error::InvalidGraph(format!("edge order: {} seen before its parent", e.far)))?;
        // the near vertex gets this edge's half segment
        diag[near] += 1.0 / h + 0.5 * h * spec.q(0.0);
        mass[near] += 0.5 * h;
        potential[near] += 0.5 * h * spec.q(0.0);
        let mut nodes = vec![Some(near)];
        let mut prev = near;
        for j in 1..tree.mesh {
            let x = j as f64 * h;
            let q = spec.q(x);
            let idx = diag.len();
            diag.push(2.0 / h + h * q);
            off.push(-1.0 / h);
            parent.push(prev);
            mass.push(h);
            potential.push(h * q);
            nodes.push(Some(idx));
            prev = idx;
        }
        if tree.is_leaf(&e.far) {
            nodes.push(None);
        } else {
            let idx = diag.len();
            let q = spec.q(l);
            diag.push(1.0 / h + 0.5 * h * q);
            off.push(-1.0 / h);
            parent.push(prev);
            mass.push(0.5 * h);
            potential.push(0.5 * h * q);
            vertex_nodes.insert(e.far.clone(), idx);
            nodes.push(Some(idx));
        }
        edge_nodes.push(nodes);
    }
    // pointwise potential values, not mass-weighted
    for (p, m) in potential.iter_mut().zip(&mass) {
        *p /= m;
    }
    Ok(DiscreteOperator { diag, off, parent, mass, potential, vertex_nodes, edge_nodes, edge_steps })
}

/// The `count` smallest eigenvalues of `M⁻¹(K + Q)` with multiplicity,
/// ascending, located by bisection on inertia counts to relative width
/// `1e−8`.
pub fn low_eigenvalues(op: &DiscreteOperator, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > op.dimension() / 10 {
        return Err(Error::InvalidArgument(format!(
            "count {count} exceeds a tenth of the dimension {}",
            op.dimension()
        )));
    }
    let (lo, top) = op.gershgorin();
    let lo = lo - 1e-12 * lo.abs().max(1.0);
    let mut hi = lo.abs().max(1.0);
    let mut hi_count = op.count_below(hi);
    while hi_count < count {
        if hi > top {
            return Err(Error::NoConvergence("no upper bracket below the Gershgorin bound".into()));
        }
        hi *= 2.0;
        hi_count = op.count_below(hi);
    }
    let mut out = Vec::with_capacity(count);
    let mut stack = vec![(lo, hi, 0usize, hi_count)];
    // depth-first, lower half first, so eigenvalues come out ascending
    while let Some((a, b, ca, cb)) = stack.pop() {
        if cb == ca || ca >= count {
            continue;
        }
        let width = b - a;
        if width <= 1e-8 * a.abs().max(b.abs()).max(1e-6) {
            let mid = 0.5 * (a + b);
            out.extend(std::iter::repeat(mid).take((cb - ca).min(count - ca)));
            continue;
        }
        let mid = 0.5 * (a + b);
        let cm = op.count_below(mid);
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out.truncate(count);
    Ok(out)
}

/// Fraction of `eigenvalues` inside some band widened by `slack`.
pub fn band_coverage(eigenvalues: &[f64], bands: &[Band], slack: f64) -> f64 {
    if eigenvalues.is_empty() {
        return 1.0;
    }
    let inside = eigenvalues.iter().filter(|&&e| bands.iter().any(|b| b.contains(e, slack))).count();
    inside as f64 / eigenvalues.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolventComparison {
    /// Largest relative deviation over compared points.
    pub max_relative: f64,
    pub points: usize,
}

/// `sin²(π x / l)` on the first edge of type 0 leaving the identity.
pub fn root_bump(graph: &CayleyConfig) -> Result<EdgeLoad> {
    let l = graph.edge(0)?.length();
    Ok(EdgeLoad::new(Word::identity().times(Letter::pos(0)), move |x| {
        Complex64::new((std::f64::consts::PI * x / l).sin().powi(2), 0.0)
    }))
}

/// Solves the discrete problem `(K + Q − λM) u = M f` for a load on one
/// edge and compares `u` with the multiplier-based resolvent at mesh points
/// of edges within half the depth where `|h| > 1e−8`.
pub fn discrete_resolvent_compare(
    tree: &TruncatedTree,
    op: &DiscreteOperator,
    graph: &CayleyConfig,
    set: &MultiplierSet,
    load: &EdgeLoad,
) -> Result<ResolventComparison> {
    let lambda = set.lambda;
    if lambda.im != 0.0 || lambda.re >= 0.0 {
        return Err(Error::InvalidArgument(format!("comparison needs negative real λ, got {lambda}")));
    }
    let source = tree
        .edges
        .iter()
        .position(|e| e.far == load.edge)
        .ok_or_else(|| Error::InvalidArgument(format!("load edge {} not in the tree", load.edge)))?;
    let mut rhs = vec![Complex64::new(0.0, 0.0); op.dimension()];
    let h = op.edge_steps[source];
    for (j, node) in op.edge_nodes[source].iter().enumerate() {
        if let Some(i) = node {
            let weight = if j == 0 || j == tree.mesh { 0.5 * h } else { h };
            rhs[*i] += load.eval(j as f64 * h) * weight;
        }
    }
    let u = op.solve_shifted(lambda, &rhs)?;
    let exact = apply_resolvent(graph, set, std::slice::from_ref(load), tree.depth, 400)?;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (k, e) in tree.edges.iter().enumerate() {
        if 2 * e.level > tree.depth {
            continue;
        }
        let step = op.edge_steps[k];
        for (j, node) in op.edge_nodes[k].iter().enumerate() {
            let Some(i) = node else { continue };
            let want = exact.value(k, j as f64 * step)?;
            if want.norm() <= 1e-8 {
                continue;
            }
            worst = worst.max((u[*i] - want).norm() / want.norm());
            points += 1;
        }
    }
    Ok(ResolventComparison { max_relative: worst, points })
}
