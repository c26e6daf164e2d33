use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;
use treespec::multiplier::solve_multipliers;
use treespec::oracle::{
    assemble, band_coverage, build_truncated, discrete_resolvent_compare, low_eigenvalues, root_bump,
};
use treespec::spectrum::{scan_bands, spectral_lower_bound, Abscissa};
use treespec::{Band, Classification, MultiplierSource, SpectralSample};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{bands_csv, scan_csv, scan_svg, write_atomic};

/// Largest tolerated share of unresolved scan samples.
pub const MAX_UNRESOLVED: f64 = 0.1;
/// Below this depth the comparison against the infinite tree is not graded.
pub const MIN_GRADED_DEPTH: usize = 6;
pub const MIN_COVERAGE: f64 = 0.9;
pub const MAX_DEVIATION: f64 = 0.02;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        ComplexValue { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveRecord {
    pub lambda: ComplexValue,
    pub mu: Vec<ComplexValue>,
    pub residual: f64,
    pub rho: f64,
    pub filters_passed: Vec<&'static str>,
    pub source: &'static str,
    pub ambiguous: bool,
}

pub fn cmd_solve(cfg: &RunConfig, lambda: Complex64) -> CliResult<SolveRecord> {
    let set = solve_multipliers(lambda, &cfg.graph, &cfg.tol)?;
    let record = SolveRecord {
        lambda: lambda.into(),
        mu: set.mu.iter().map(|&m| m.into()).collect(),
        residual: set.residual,
        rho: set.summability_radius,
        // an accepted set has passed every filter in order
        filters_passed: vec!["residual", "unit_disc", "summability_proxy", "spectral_radius"],
        source: match set.source {
            MultiplierSource::QuarticElimination => "quartic_elimination",
            MultiplierSource::EqualLengthQuadratic => "equal_length_quadratic",
            MultiplierSource::Continuation => "continuation",
        },
        ambiguous: set.ambiguous,
    };
    let json = serde_json::to_string_pretty(&record).expect("plain data serializes");
    write_atomic(&cfg.out.join("solve.json"), format!("{json}\n").as_bytes())?;
    Ok(record)
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub samples: Vec<SpectralSample>,
    pub bands: Vec<Band>,
    pub unresolved_fraction: f64,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

impl ScanOutcome {
    /// Exit status of a scan: too many unresolved samples is a numerical failure.
    pub fn status(&self) -> CliResult<()> {
        if self.unresolved_fraction > MAX_UNRESOLVED {
            return Err(CliError::Numerical(format!(
                "{:.1}% of samples unresolved (limit {:.0}%)",
                100.0 * self.unresolved_fraction,
                100.0 * MAX_UNRESOLVED
            )));
        }
        Ok(())
    }
}

pub fn cmd_scan(cfg: &RunConfig) -> CliResult<ScanOutcome> {
    let (a, b) = cfg.scan.range;
    let (bands, samples) = scan_bands(a, b, cfg.scan.points, &cfg.graph, &cfg.tol, cfg.scan.abscissa)?;
    let unresolved = samples.iter().filter(|s| s.classification == Classification::Unresolved).count();
    let csv = cfg.out.join("scan.csv");
    let svg = cfg.out.join("scan.svg");
    write_atomic(&csv, scan_csv(&samples, cfg.graph.rank()).as_bytes())?;
    write_atomic(&svg, scan_svg(&samples, &bands, cfg.graph.rank(), cfg.scan.abscissa).as_bytes())?;
    Ok(ScanOutcome { unresolved_fraction: unresolved as f64 / samples.len() as f64, samples, bands, csv, svg })
}

#[derive(Clone, Debug)]
pub struct BandsOutcome {
    pub bands: Vec<Band>,
    /// Bottom of the spectrum, for graphs of rank at least two.
    pub lower_bound: Option<f64>,
    pub csv: PathBuf,
}

pub fn cmd_bands(cfg: &RunConfig) -> CliResult<BandsOutcome> {
    let (a, b) = cfg.scan.range;
    let (bands, _) = scan_bands(a, b, cfg.scan.points, &cfg.graph, &cfg.tol, Abscissa::Sigma)?;
    let lower_bound = if cfg.graph.supports_gap_claim() {
        Some(spectral_lower_bound(&cfg.graph, 400, &cfg.tol)?)
    } else {
        None
    };
    let csv = cfg.out.join("bands.csv");
    write_atomic(&csv, bands_csv(&bands).as_bytes())?;
    Ok(BandsOutcome { bands, lower_bound, csv })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub depth: usize,
    pub mesh: usize,
    pub dimension: usize,
    pub eigenvalues: Vec<f64>,
    pub smallest_eigenvalue: f64,
    pub lower_bound: Option<f64>,
    pub coverage: f64,
    pub lambda: f64,
    pub deviation: Option<f64>,
    pub compare_points: Option<usize>,
    /// Deviation at half the mesh divided by the deviation at the full mesh.
    pub halving_ratio: Option<f64>,
    pub truncation_dominated: bool,
    /// `None` when the depth is too shallow to grade.
    pub passed: Option<bool>,
}

impl OracleReport {
    pub fn status(&self) -> CliResult<()> {
        match self.passed {
            Some(false) => Err(CliError::Numerical(format!(
                "oracle thresholds failed: coverage {:.3} (need ≥ {MIN_COVERAGE}), deviation {:?} (need ≤ {MAX_DEVIATION})",
                self.coverage, self.deviation
            ))),
            _ => Ok(()),
        }
    }
}

fn compare_at(cfg: &RunConfig, mesh: usize, set: &treespec::MultiplierSet) -> CliResult<(f64, usize)> {
    let tree = build_truncated(&cfg.graph, cfg.oracle.depth, mesh)?;
    let op = assemble(&tree, &cfg.graph)?;
    let cmp = discrete_resolvent_compare(&tree, &op, &cfg.graph, set, &root_bump(&cfg.graph)?)?;
    Ok((cmp.max_relative, cmp.points))
}

pub fn cmd_oracle(cfg: &RunConfig) -> CliResult<OracleReport> {
    let o = &cfg.oracle;
    let tree = build_truncated(&cfg.graph, o.depth, o.mesh)?;
    let op = assemble(&tree, &cfg.graph)?;
    let count = o.eigenvalues.min(op.dimension() / 10).max(1);
    let eigenvalues = low_eigenvalues(&op, count)?;
    let top = eigenvalues.last().copied().unwrap_or(1.0).max(1e-3) * 1.5;
    let (bands, samples) = scan_bands(0.0, top, 1000, &cfg.graph, &cfg.tol, Abscissa::Sigma)?;
    let spacing = samples[1].sigma - samples[0].sigma;
    let coverage = band_coverage(&eigenvalues, &bands, spacing);
    let lower_bound = if cfg.graph.supports_gap_claim() {
        Some(spectral_lower_bound(&cfg.graph, 400, &cfg.tol)?)
    } else {
        None
    };

    let truncation_dominated = o.depth < MIN_GRADED_DEPTH;
    let (mut deviation, mut compare_points, mut halving_ratio) = (None, None, None);
    if !truncation_dominated {
        let set = solve_multipliers(Complex64::new(o.lambda, 0.0), &cfg.graph, &cfg.tol)?;
        let (dev, points) = compare_at(cfg, o.mesh, &set)?;
        deviation = Some(dev);
        compare_points = Some(points);
        if o.mesh / 2 >= 16 {
            let (coarse, _) = compare_at(cfg, o.mesh / 2, &set)?;
            halving_ratio = Some(coarse / dev);
        }
    }
    let passed = deviation.map(|d| coverage >= MIN_COVERAGE && d <= MAX_DEVIATION);
    let report = OracleReport {
        depth: o.depth,
        mesh: o.mesh,
        dimension: op.dimension(),
        smallest_eigenvalue: eigenvalues[0],
        eigenvalues,
        lower_bound,
        coverage,
        lambda: o.lambda,
        deviation,
        compare_points,
        halving_ratio,
        truncation_dominated,
        passed,
    };
    let json = serde_json::to_string_pretty(&report).expect("plain data serializes");
    write_atomic(&cfg.out.join("oracle_report.json"), format!("{json}\n").as_bytes())?;
    Ok(report)
}

/// Human-readable summary of an oracle report.
pub fn oracle_summary(r: &OracleReport) -> String {
    let mut lines = vec![
        format!("depth {} mesh {} ({} unknowns)", r.depth, r.mesh, r.dimension),
        format!("{} eigenvalues, smallest {:.6}", r.eigenvalues.len(), r.smallest_eigenvalue),
    ];
    if let Some(lb) = r.lower_bound {
        lines.push(format!(
            "infinite-tree bottom {lb:.6} (smallest exceeds it by {:.1}%)",
            100.0 * (r.smallest_eigenvalue - lb) / lb
        ));
    }
    lines.push(format!("band coverage {:.3}", r.coverage));
    if r.truncation_dominated {
        lines.push(format!("truncation-dominated: depth {} < {MIN_GRADED_DEPTH}, resolvent not graded", r.depth));
    } else if let Some(d) = r.deviation {
        lines.push(format!("resolvent deviation at λ = {} : {d:.3e}", r.lambda));
        if let Some(h) = r.halving_ratio {
            lines.push(format!("deviation ratio mesh/2 : mesh = {h:.2}"));
        }
    }
    lines.push(match r.passed {
        None => "result: not graded".into(),
        Some(true) => "result: PASS".into(),
        Some(false) => "result: FAIL".into(),
    });
    lines.join("\n")
}
