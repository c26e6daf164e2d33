//! Run configuration: a TOML file with `[graph]`, `[scan]`, `[oracle]` and
//! `[tolerances]` sections, optionally layered over a named preset.
//!
//! ```toml
//! [graph]
//! lengths = [1.0, "89/100"]
//! potentials = [{ kind = "zero" }, { kind = "constant", value = 0.5 }]
//!
//! [scan]
//! range = [0.0, 40.0]
//! points = 2001
//! abscissa = "sigma"
//!
//! [oracle]
//! depth = 6
//! mesh = 32
//! lambda = -1.0
//! eigenvalues = 100
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use treespec::spectrum::Abscissa;
use treespec::{CayleyConfig, EdgeSpec, PotentialSpec, ToleranceConfig};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    FigEqual,
    Fig089,
    Fig2,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig-equal" => Ok(Preset::FigEqual),
            "fig-089" => Ok(Preset::Fig089),
            "fig-2" => Ok(Preset::Fig2),
            _ => Err(format!("unknown preset {s:?}; expected fig-equal, fig-089 or fig-2")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSettings {
    pub range: (f64, f64),
    pub points: usize,
    pub abscissa: Abscissa,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSettings {
    pub depth: usize,
    pub mesh: usize,
    /// Negative real spectral parameter for the resolvent comparison.
    pub lambda: f64,
    pub eigenvalues: usize,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub graph: CayleyConfig,
    pub scan: ScanSettings,
    pub oracle: OracleSettings,
    pub tol: ToleranceConfig,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graph: Option<GraphSection>,
    scan: Option<ScanSection>,
    oracle: Option<OracleSection>,
    tolerances: Option<ToleranceSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    rank: Option<usize>,
    lengths: Vec<LengthEntry>,
    potentials: Option<Vec<PotentialEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LengthEntry {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PotentialEntry {
    Zero,
    Constant { value: f64 },
    Piecewise { values: Vec<f64> },
    Sampled { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    range: Option<[f64; 2]>,
    points: Option<usize>,
    abscissa: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    depth: Option<usize>,
    mesh: Option<usize>,
    lambda: Option<f64>,
    eigenvalues: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    residual: Option<f64>,
    exceptional: Option<f64>,
    reality: Option<f64>,
    epsilon: Option<f64>,
    polish_steps: Option<usize>,
}

pub fn parse_abscissa(s: &str) -> CliResult<Abscissa> {
    match s {
        "sigma" => Ok(Abscissa::Sigma),
        "sqrt" | "sqrt_sigma" => Ok(Abscissa::SqrtSigma),
        _ => Err(CliError::Config(format!("abscissa must be \"sigma\" or \"sqrt\", got {s:?}"))),
    }
}

fn parse_length(entry: &LengthEntry, potential: PotentialSpec) -> CliResult<EdgeSpec> {
    let spec = match entry {
        LengthEntry::Number(x) => EdgeSpec::new(*x, potential),
        LengthEntry::Text(s) => {
            let Some((n, d)) = s.split_once('/') else {
                let x: f64 =
                    s.trim().parse().map_err(|_| CliError::Config(format!("length {s:?} is not a number")))?;
                return EdgeSpec::new(x, potential).map_err(|e| CliError::Config(e.to_string()));
            };
            let parse = |t: &str| {
                t.trim().parse::<u64>().map_err(|_| CliError::Config(format!("length {s:?} is not num/den")))
            };
            EdgeSpec::rational(parse(n)?, parse(d)?, potential)
        }
    };
    spec.map_err(|e| CliError::Config(e.to_string()))
}

fn potential_spec(entry: PotentialEntry) -> PotentialSpec {
    match entry {
        PotentialEntry::Zero => PotentialSpec::Zero,
        PotentialEntry::Constant { value } => PotentialSpec::Constant(value),
        PotentialEntry::Piecewise { values } => PotentialSpec::PiecewiseConstant(values),
        PotentialEntry::Sampled { values } => PotentialSpec::Sampled(values),
    }
}

fn graph_from(section: GraphSection) -> CliResult<CayleyConfig> {
    let n = section.lengths.len();
    if let Some(rank) = section.rank {
        if rank != n {
            return Err(CliError::Config(format!("rank = {rank} but {n} lengths given")));
        }
    }
    let potentials: Vec<PotentialSpec> = match section.potentials {
        None => vec![PotentialSpec::Zero; n],
        Some(p) if p.len() == n => p.into_iter().map(potential_spec).collect(),
        Some(p) => return Err(CliError::Config(format!("{} potentials for {n} lengths", p.len()))),
    };
    let edges = section
        .lengths
        .iter()
        .zip(potentials)
        .map(|(l, q)| parse_length(l, q))
        .collect::<CliResult<Vec<_>>>()?;
    CayleyConfig::new(edges).map_err(|e| CliError::Config(e.to_string()))
}

fn rational_pair(a: (u64, u64), b: (u64, u64)) -> CayleyConfig {
    let edges = [a, b].iter().map(|&(n, d)| EdgeSpec::rational(n, d, PotentialSpec::Zero).unwrap()).collect();
    CayleyConfig::new(edges).unwrap()
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let oracle = OracleSettings { depth: 6, mesh: 32, lambda: -1.0, eigenvalues: 100 };
        let (graph, scan) = match preset {
            Preset::FigEqual => (
                rational_pair((1, 1), (1, 1)),
                ScanSettings { range: (0.0, 40.0), points: 2001, abscissa: Abscissa::Sigma },
            ),
            Preset::Fig089 => (
                rational_pair((1, 1), (89, 100)),
                ScanSettings { range: (0.0, 40.0), points: 2001, abscissa: Abscissa::Sigma },
            ),
            Preset::Fig2 => (
                rational_pair((1, 1), (2, 1)),
                ScanSettings { range: (0.0, (4.0 * PI).powi(2)), points: 4001, abscissa: Abscissa::SqrtSigma },
            ),
        };
        RunConfig { graph, scan, oracle, tol: ToleranceConfig::default(), out: PathBuf::from(".") }
    }

    /// Reads `path` and layers its sections over `base` (the `fig-equal`
    /// preset when none is given). A file without a `[graph]` section needs a
    /// base.
    pub fn load(path: &Path, base: Option<RunConfig>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str, base: Option<RunConfig>) -> CliResult<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg = base.unwrap_or_else(|| RunConfig::preset(Preset::FigEqual));
        if let Some(g) = file.graph {
            cfg.graph = graph_from(g)?;
        }
        if let Some(s) = file.scan {
            if let Some([a, b]) = s.range {
                cfg.scan.range = (a, b);
            }
            if let Some(p) = s.points {
                cfg.scan.points = p;
            }
            if let Some(a) = s.abscissa {
                cfg.scan.abscissa = parse_abscissa(&a)?;
            }
        }
        if let Some(o) = file.oracle {
            cfg.oracle.depth = o.depth.unwrap_or(cfg.oracle.depth);
            cfg.oracle.mesh = o.mesh.unwrap_or(cfg.oracle.mesh);
            cfg.oracle.lambda = o.lambda.unwrap_or(cfg.oracle.lambda);
            cfg.oracle.eigenvalues = o.eigenvalues.unwrap_or(cfg.oracle.eigenvalues);
        }
        if let Some(t) = file.tolerances {
            cfg.tol.residual = t.residual.unwrap_or(cfg.tol.residual);
            cfg.tol.exceptional = t.exceptional.unwrap_or(cfg.tol.exceptional);
            cfg.tol.reality = t.reality.unwrap_or(cfg.tol.reality);
            cfg.tol.epsilon = t.epsilon.unwrap_or(cfg.tol.epsilon);
            cfg.tol.polish_steps = t.polish_steps.unwrap_or(cfg.tol.polish_steps);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let (a, b) = self.scan.range;
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
            return Err(CliError::Config(format!("scan range [{a}, {b}] must satisfy 0 ≤ A < B")));
        }
        if self.scan.points < 2 {
            return Err(CliError::Config("scan needs at least 2 points".into()));
        }
        let t = &self.tol;
        if [t.residual, t.exceptional, t.reality, t.epsilon].iter().any(|x| !(*x > 0.0)) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if !(self.oracle.lambda < 0.0) {
            return Err(CliError::Config(format!("oracle lambda must be negative, got {}", self.oracle.lambda)));
        }
        Ok(())
    }
}
