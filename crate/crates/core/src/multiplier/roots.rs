use nalgebra::DMatrix;
use num_complex::Complex64;

use super::EndValues;
use crate::error::{Error, Result};
use crate::graph::CayleyConfig;

/// Magnitude below which the leading coefficient counts as zero.
const LEADING_FLOOR: f64 = 1e-14;

/// Quartic in `μ_index` obtained by eliminating the other multiplier of a
/// rank-two graph. Coefficients run from degree 4 down to degree 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuarticCoefficients {
    pub c: [Complex64; 5],
}

impl QuarticCoefficients {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.c, z)
    }
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn horner_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub(crate) fn quartic_from_ends(ends: &EndValues, index: usize) -> QuarticCoefficients {
    let other = 1 - index;
    let (c1, s1) = (ends.c[index], ends.s[index]);
    let (c2, s2) = (ends.c[other], ends.s[other]);
    let s22 = s2 * s2;
    let zero = Complex64::new(0.0, 0.0);
    QuarticCoefficients {
        c: [
            s22 * 3.0,
            -(s1 * c2 * s2 + s22 * c1) * 8.0,
            s22 * 2.0 - s1 * s1 * 4.0 + s22 * c1 * c1 * 4.0 + c2 * c2 * s1 * s1 * 4.0 + s1 * c2 * s2 * c1 * 8.0,
            zero,
            -s22,
        ],
    }
}

/// Quartic for multiplier `index ∈ {0, 1}` of a rank-two graph.
pub fn quartic_coefficients_m2(lambda: Complex64, graph: &CayleyConfig, index: usize) -> Result<QuarticCoefficients> {
    if graph.rank() != 2 {
        return Err(Error::Unsupported(format!("quartic elimination needs rank 2, got {}", graph.rank())));
    }
    if index > 1 {
        return Err(Error::GeneratorOutOfRange { index, rank: 2 });
    }
    Ok(quartic_from_ends(&EndValues::at(graph, lambda), index))
}

/// Adjacent Newton-polygon segments whose root radii differ by less than
/// this factor are solved together.
const GROUP_SEPARATION: f64 = 1e4;

/// All roots of `c[0] zⁿ + … + c[n]` with multiplicity, polished by Newton
/// steps on the polynomial and sorted by real part, then imaginary part.
///
/// The Newton polygon of the coefficients splits the roots into groups of
/// similar magnitude. Each group comes from the companion matrix of its
/// rescaled coefficient slice, so tiny and huge roots of the same
/// polynomial both keep their relative accuracy.
pub fn polynomial_roots(coeffs: &[Complex64], polish_steps: usize) -> Result<Vec<Complex64>> {
    if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) || coeffs[0].norm() <= LEADING_FLOOR {
        return Err(Error::DegenerateLeading);
    }
    let zeros = coeffs.iter().rev().take_while(|c| c.norm() == 0.0).count();
    // ascending powers from here on
    let a: Vec<Complex64> = coeffs[..coeffs.len() - zeros].iter().rev().cloned().collect();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / coeffs[0]).collect();
    for (lo, hi) in root_groups(&a) {
        let log_r = (a[lo].norm().ln() - a[hi].norm().ln()) / (hi - lo) as f64;
        let slice: Vec<Complex64> = (lo..=hi)
            .rev()
            .map(|k| {
                if a[k].norm() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mag = (a[k].norm().ln() - a[hi].norm().ln() + (k as f64 - hi as f64) * log_r).exp();
                Complex64::from_polar(mag, a[k].arg() - a[hi].arg())
            })
            .collect();
        let r = log_r.exp();
        for w in companion_eigenvalues(&slice)? {
            roots.push(polish(&monic, w * r, polish_steps));
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Degree ranges `(lo, hi)` of the upper Newton polygon of `ln|a_k|`,
/// merging neighbours whose radii are within `GROUP_SEPARATION`.
fn root_groups(a: &[Complex64]) -> Vec<(usize, usize)> {
    let pts: Vec<(f64, f64)> =
        (0..a.len()).filter(|&k| a[k].norm() > 0.0).map(|k| (k as f64, a[k].norm().ln())).collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (q.0 - o.0) * (p.1 - o.1) - (q.1 - o.1) * (p.0 - o.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let log_radius = |u: (f64, f64), v: (f64, f64)| (u.1 - v.1) / (v.0 - u.0);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last_radius = f64::NEG_INFINITY;
    for seg in hull.windows(2) {
        let rad = log_radius(seg[0], seg[1]);
        let (lo, hi) = (seg[0].0 as usize, seg[1].0 as usize);
        match groups.last_mut() {
            Some(g) if rad - last_radius < GROUP_SEPARATION.ln() => g.1 = hi,
            _ => groups.push((lo, hi)),
        }
        last_radius = rad;
    }
    groups
}

/// Eigenvalues of the companion matrix of `c[0] zⁿ + … + c[n]`.
fn companion_eigenvalues(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / coeffs[0]).collect();
    let companion = DMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            -monic[j + 1]
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eig = companion
        .eigenvalues()
        .ok_or_else(|| Error::NoConvergence("companion matrix Schur form".into()))?;
    Ok(eig.iter().cloned().collect())
}

fn polish(monic: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    let mut pz = horner(monic, z).norm();
    for _ in 0..steps {
        let (p, dp) = horner_with_derivative(monic, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let pn = horner(monic, next).norm();
        if !(pn < pz) {
            break;
        }
        z = next;
        pz = pn;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn regression_quartic_at_zero() {
        let g = CayleyConfig::free(&[1.0, 1.0]).unwrap();
        let q = quartic_coefficients_m2(Complex64::new(0.0, 0.0), &g, 0).unwrap();
        assert_eq!(q.c.to_vec(), re(&[3.0, -16.0, 14.0, 0.0, -1.0]));
        let roots = polynomial_roots(&q.c, 2).unwrap();
        let s5 = 5f64.sqrt();
        let expected = [2.0 - s5, 1.0 / 3.0, 1.0, 2.0 + s5];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).norm() < 1e-12, "{r} vs {e}");
            assert!(q.eval(*r).norm() <= 1e-10);
        }
    }

    #[test]
    fn fourth_roots_of_unity() {
        let roots = polynomial_roots(&re(&[1.0, 0.0, 0.0, 0.0, -1.0]), 2).unwrap();
        for r in &roots {
            assert!((r.powi(4) - 1.0).norm() < 1e-13);
        }
        assert!((roots[0] + 1.0).norm() < 1e-13);
        assert!((roots[3] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn repeated_roots_keep_multiplicity() {
        let roots = polynomial_roots(&re(&[1.0, -2.0, 1.0, 0.0, 0.0]), 2).unwrap();
        let expected = [0.0, 0.0, 1.0, 1.0];
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).norm() < 1e-7, "{roots:?}");
        }
    }

    #[test]
    fn wide_root_spread_keeps_small_roots() {
        let roots = polynomial_roots(&re(&[1.0, -1e40, 1.0]), 2).unwrap();
        assert!((roots[0].re - 1e-40).abs() < 1e-52, "{roots:?}");
        assert!((roots[1].re - 1e40).abs() < 1e28);
    }

    #[test]
    fn degenerate_leading_coefficient() {
        assert_eq!(polynomial_roots(&re(&[1e-20, 1.0, 2.0]), 2), Err(Error::DegenerateLeading));
        assert_eq!(polynomial_roots(&re(&[0.0, 0.0]), 2), Err(Error::DegenerateLeading));
    }

    #[test]
    fn rank_check() {
        let g = CayleyConfig::free(&[1.0, 1.0, 1.0]).unwrap();
        assert!(quartic_coefficients_m2(Complex64::new(0.0, 0.0), &g, 0).is_err());
    }

    #[test]
    fn index_two_swaps_roles() {
        let g = CayleyConfig::free(&[1.0, 2.0]).unwrap();
        let lam = Complex64::new(-1.0, 0.5);
        let a = quartic_coefficients_m2(lam, &g, 0).unwrap();
        let swapped = CayleyConfig::free(&[2.0, 1.0]).unwrap();
        let b = quartic_coefficients_m2(lam, &swapped, 1).unwrap();
        assert_eq!(a, b);
    }
}
