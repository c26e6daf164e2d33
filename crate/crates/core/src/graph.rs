//! Cayley graphs of free groups as metric graphs: edge types, even
//! potentials, reduced words and finite balls around the identity.
//!
//! Generators are indexed from 0 in the API. `Display` renders the
//! conventional 1-based names (`s1`, `s2^-1`, ...).

use std::fmt;

use crate::error::{Error, Result};

const EVEN_TOL: f64 = 1e-10;

/// One letter `s_g` or `s_g^{-1}` of a word in the free group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    generator: usize,
    inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, sign: i8) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        Letter { generator, inverse: sign < 0 }
    }

    pub fn pos(generator: usize) -> Self {
        Letter { generator, inverse: false }
    }

    pub fn neg(generator: usize) -> Self {
        Letter { generator, inverse: true }
    }

    pub fn generator(self) -> usize {
        self.generator
    }

    pub fn sign(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inverse(self) -> Self {
        Letter { generator: self.generator, inverse: !self.inverse }
    }

    fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.inverse != other.inverse
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "s{}^-1", self.generator + 1)
        } else {
            write!(f, "s{}", self.generator + 1)
        }
    }
}

/// A reduced word. The empty word is the identity vertex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    /// Right multiplication by one letter, cancelling if needed.
    pub fn times(&self, letter: Letter) -> Word {
        let mut letters = self.0.clone();
        push_reduced(&mut letters, letter);
        Word(letters)
    }

    /// Group product `self * other`, reduced.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        for &l in &other.0 {
            push_reduced(&mut letters, l);
        }
        Word(letters)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

fn push_reduced(stack: &mut Vec<Letter>, letter: Letter) {
    match stack.last() {
        Some(&top) if top.cancels(letter) => {
            stack.pop();
        }
        _ => stack.push(letter),
    }
}

/// Free reduction. A single stack pass gives the unique normal form.
pub fn reduce_word(letters: &[Letter]) -> Word {
    let mut stack = Vec::with_capacity(letters.len());
    for &l in letters {
        push_reduced(&mut stack, l);
    }
    Word(stack)
}

/// Position of the first cancelling pair, if the sequence is not reduced.
pub fn first_cancellation(letters: &[Letter]) -> Option<usize> {
    letters.windows(2).position(|w| w[0].cancels(w[1]))
}

fn all_letters(rank: usize) -> impl Iterator<Item = Letter> {
    (0..rank).flat_map(|g| [Letter::pos(g), Letter::neg(g)])
}

/// All reduced words `s_m w'` of length at most `depth`, ordered by length
/// and then lexicographically.
pub fn enumerate_subtree_vertices(rank: usize, root_generator: usize, depth: usize) -> Result<Vec<Word>> {
    if root_generator >= rank {
        return Err(Error::GeneratorOutOfRange { index: root_generator, rank });
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    let mut out = vec![Word(vec![Letter::pos(root_generator)])];
    let mut frontier = 0..1;
    for _ in 1..depth {
        let start = out.len();
        for i in frontier.clone() {
            let w = out[i].clone();
            let last = w.last().expect("non-empty");
            for l in all_letters(rank) {
                if !l.cancels(last) {
                    let mut next = w.0.clone();
                    next.push(l);
                    out.push(Word(next));
                }
            }
        }
        frontier = start..out.len();
    }
    Ok(out)
}

/// An edge of the ball of radius `depth` around the identity, oriented away
/// from the identity. The local coordinate runs from `near` (x = 0) to
/// `far` (x = l).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub near: Word,
    pub far: Word,
    pub generator: usize,
    /// Distance of `far` from the identity, in edges.
    pub level: usize,
}

/// Edges of the ball in breadth-first, lexicographic order. Every edge's
/// near vertex appears as the far vertex of an earlier edge (or is the
/// identity).
pub fn ball_edges(rank: usize, depth: usize) -> Vec<TreeEdge> {
    let mut edges = Vec::new();
    let mut frontier = vec![Word::identity()];
    for level in 1..=depth {
        let mut next = Vec::with_capacity(frontier.len() * (2 * rank).saturating_sub(1));
        for w in &frontier {
            for l in all_letters(rank) {
                if w.last().is_some_and(|last| last.cancels(l)) {
                    continue;
                }
                let mut letters = w.0.clone();
                letters.push(l);
                let far = Word(letters);
                edges.push(TreeEdge { near: w.clone(), far: far.clone(), generator: l.generator(), level });
                next.push(far);
            }
        }
        frontier = next;
    }
    edges
}

/// Even, nonnegative potential on one edge type.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    /// Values on equal subintervals; must be palindromic.
    PiecewiseConstant(Vec<f64>),
    /// Values on a uniform grid of `N + 1` points including both ends;
    /// linearly interpolated in between.
    Sampled(Vec<f64>),
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let check_values = |v: &[f64]| -> Result<()> {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPotential("non-finite value".into()));
            }
            if let Some(x) = v.iter().find(|&&x| x < 0.0) {
                return Err(Error::InvalidPotential(format!("negative value {x}")));
            }
            let n = v.len();
            for i in 0..n / 2 {
                if (v[i] - v[n - 1 - i]).abs() > EVEN_TOL {
                    return Err(Error::InvalidPotential(format!(
                        "not even: value {i} = {} but mirrored value = {}",
                        v[i],
                        v[n - 1 - i]
                    )));
                }
            }
            Ok(())
        };
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant(c) => check_values(&[*c]),
            PotentialSpec::PiecewiseConstant(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidPotential("empty piecewise-constant potential".into()));
                }
                check_values(v)
            }
            PotentialSpec::Sampled(v) => {
                if v.len() < 2 {
                    return Err(Error::InvalidPotential("sampled potential needs at least 2 points".into()));
                }
                check_values(v)
            }
        }
    }

    /// Potential value at `x` in `[0, length]`.
    pub fn value_at(&self, x: f64, length: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::PiecewiseConstant(v) => {
                let j = ((x / length) * v.len() as f64).floor() as isize;
                v[j.clamp(0, v.len() as isize - 1) as usize]
            }
            PotentialSpec::Sampled(v) => {
                let n = v.len() - 1;
                let s = (x / length).clamp(0.0, 1.0) * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                let frac = s - i as f64;
                v[i] * (1.0 - frac) + v[i + 1] * frac
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::PiecewiseConstant(v) | PotentialSpec::Sampled(v) => v.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Constant(c) => *c == 0.0,
            PotentialSpec::PiecewiseConstant(v) | PotentialSpec::Sampled(v) => v.iter().all(|&x| x == 0.0),
        }
    }
}

/// Rational edge length `num / den`, kept exactly for periodicity arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RationalLength {
    pub num: u64,
    pub den: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSpec {
    length: f64,
    potential: PotentialSpec,
    rational: Option<RationalLength>,
}

impl EdgeSpec {
    pub fn new(length: f64, potential: PotentialSpec) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidEdge(format!("length must be positive and finite, got {length}")));
        }
        potential.validate()?;
        Ok(EdgeSpec { length, potential, rational: None })
    }

    /// Zero-potential edge.
    pub fn free(length: f64) -> Result<Self> {
        EdgeSpec::new(length, PotentialSpec::Zero)
    }

    pub fn rational(num: u64, den: u64, potential: PotentialSpec) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidEdge(format!("rational length {num}/{den} must be positive")));
        }
        let mut e = EdgeSpec::new(num as f64 / den as f64, potential)?;
        e.rational = Some(RationalLength { num, den });
        Ok(e)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn rational_length(&self) -> Option<RationalLength> {
        self.rational
    }

    pub fn q(&self, x: f64) -> f64 {
        self.potential.value_at(x, self.length)
    }
}

/// The metric Cayley graph of the free group of rank `M = edges.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct CayleyConfig {
    edges: Vec<EdgeSpec>,
}

impl CayleyConfig {
    pub fn new(edges: Vec<EdgeSpec>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidGraph("rank must be at least 1".into()));
        }
        Ok(CayleyConfig { edges })
    }

    /// Zero potential on every edge type.
    pub fn free(lengths: &[f64]) -> Result<Self> {
        CayleyConfig::new(lengths.iter().map(|&l| EdgeSpec::free(l)).collect::<Result<_>>()?)
    }

    pub fn rank(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn edge(&self, m: usize) -> Result<&EdgeSpec> {
        self.edges.get(m).ok_or(Error::GeneratorOutOfRange { index: m, rank: self.rank() })
    }

    /// Spectral-gap statements need at least two generators.
    pub fn supports_gap_claim(&self) -> bool {
        self.rank() >= 2
    }

    /// All edge types share length and potential.
    pub fn is_equal_length(&self) -> bool {
        let first = &self.edges[0];
        self.edges.iter().all(|e| e.length == first.length && e.potential == first.potential)
    }

    pub fn sup_potential(&self) -> f64 {
        self.edges.iter().map(|e| e.potential.sup()).fold(0.0, f64::max)
    }

    pub fn is_potential_free(&self) -> bool {
        self.edges.iter().all(|e| e.potential.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(spec: &[(usize, i8)]) -> Vec<Letter> {
        spec.iter().map(|&(g, s)| Letter::new(g - 1, s)).collect()
    }

    #[test]
    fn cancellation_to_identity() {
        assert!(reduce_word(&w(&[(1, 1), (1, -1)])).is_empty());
    }

    #[test]
    fn reduced_word_is_unchanged() {
        let letters = w(&[(2, 1), (3, -1), (1, 1)]);
        assert_eq!(reduce_word(&letters).letters(), &letters[..]);
        assert_eq!(first_cancellation(&letters), None);
    }

    #[test]
    fn nested_cancellation() {
        let r = reduce_word(&w(&[(1, 1), (2, 1), (2, -1), (1, -1), (1, 1)]));
        assert_eq!(r.letters(), &w(&[(1, 1)])[..]);
    }

    #[test]
    fn inverse_of_reduced_word() {
        let word = reduce_word(&w(&[(2, 1), (3, -1), (1, 1)]));
        assert_eq!(word.inverse().letters(), &w(&[(1, -1), (3, 1), (2, -1)])[..]);
        assert!(word.concat(&word.inverse()).is_empty());
    }

    #[test]
    fn subtree_counts() {
        let d1 = enumerate_subtree_vertices(2, 0, 1).unwrap();
        assert_eq!(d1, vec![Word(vec![Letter::pos(0)])]);

        let d2 = enumerate_subtree_vertices(2, 0, 2).unwrap();
        let shown: Vec<String> = d2.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, ["s1", "s1 s1", "s1 s2", "s1 s2^-1"]);

        assert_eq!(enumerate_subtree_vertices(3, 0, 3).unwrap().len(), 31);
        assert!(matches!(enumerate_subtree_vertices(2, 2, 3), Err(Error::GeneratorOutOfRange { .. })));
    }

    #[test]
    fn ball_edge_counts() {
        assert_eq!(ball_edges(2, 1).len(), 4);
        assert_eq!(ball_edges(2, 2).len(), 16);
        assert_eq!(ball_edges(3, 2).len(), 36);
        for e in ball_edges(3, 3) {
            assert_eq!(e.near.times(Letter::new(e.generator, e.far.last().unwrap().sign())), e.far);
        }
    }

    #[test]
    fn potential_validation() {
        assert!(PotentialSpec::PiecewiseConstant(vec![1.0, 2.0, 1.0]).validate().is_ok());
        assert!(PotentialSpec::PiecewiseConstant(vec![1.0, 2.0]).validate().is_err());
        assert!(PotentialSpec::Sampled(vec![0.0, 1.0, 0.5]).validate().is_err());
        assert!(PotentialSpec::Constant(-1.0).validate().is_err());
        assert!(EdgeSpec::new(0.0, PotentialSpec::Zero).is_err());
        let s = PotentialSpec::Sampled(vec![0.0, 2.0, 0.0]);
        assert_eq!(s.value_at(0.25, 1.0), 1.0);
        assert_eq!(s.value_at(0.5, 1.0), 2.0);
    }

    #[test]
    fn equal_length_detection() {
        assert!(CayleyConfig::free(&[1.0, 1.0]).unwrap().is_equal_length());
        assert!(!CayleyConfig::free(&[1.0, 2.0]).unwrap().is_equal_length());
        assert!(CayleyConfig::new(vec![]).is_err());
    }
}
