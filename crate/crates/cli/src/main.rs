use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use treespec_cli::commands::oracle_summary;
use treespec_cli::config::parse_abscissa;
use treespec_cli::{cmd_bands, cmd_oracle, cmd_scan, cmd_solve, CliError, CliResult, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "treespec", version, about = "Multipliers, resolvents and spectra of quantum Cayley graphs")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Built-in scenario: fig-equal, fig-089 or fig-2.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the multipliers at one spectral parameter.
    Solve {
        #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
        lambda: String,
    },
    /// Sample boundary values along the real axis.
    Scan {
        #[arg(long, value_name = "A,B")]
        range: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        /// `sigma` or `sqrt`.
        #[arg(long)]
        abscissa: Option<String>,
    },
    /// List spectral bands and the bottom of the spectrum.
    Bands {
        #[arg(long, value_name = "A,B")]
        range: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Compare against the truncated-tree discretization.
    Oracle {
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        mesh: Option<usize>,
    },
}

fn pair(s: &str, what: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Config(format!("{what} must be two comma-separated numbers, got {s:?}"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn run(cli: Cli) -> CliResult<()> {
    let base = cli.preset.map(RunConfig::preset);
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path, base)?,
        None => base.unwrap_or_else(|| RunConfig::preset(Preset::FigEqual)),
    };
    cfg.out = cli.out;

    match cli.command {
        Command::Solve { lambda } => {
            let (re, im) = pair(&lambda, "--lambda")?;
            let record = cmd_solve(&cfg, Complex64::new(re, im))?;
            println!("{}", serde_json::to_string_pretty(&record).expect("plain data serializes"));
        }
        Command::Scan { range, points, abscissa } => {
            if let Some(r) = range {
                cfg.scan.range = pair(&r, "--range")?;
            }
            cfg.scan.points = points.unwrap_or(cfg.scan.points);
            if let Some(a) = abscissa {
                cfg.scan.abscissa = parse_abscissa(&a)?;
            }
            cfg.validate()?;
            let outcome = cmd_scan(&cfg)?;
            println!("{} samples, {} bands", outcome.samples.len(), outcome.bands.len());
            println!("wrote {} and {}", outcome.csv.display(), outcome.svg.display());
            outcome.status()?;
        }
        Command::Bands { range, points } => {
            if let Some(r) = range {
                cfg.scan.range = pair(&r, "--range")?;
            }
            cfg.scan.points = points.unwrap_or(cfg.scan.points);
            cfg.validate()?;
            let outcome = cmd_bands(&cfg)?;
            for b in &outcome.bands {
                println!("[{:.10}, {:.10}]", b.lower, b.upper);
            }
            if outcome.bands.is_empty() {
                println!("no bands in range");
            }
            match outcome.lower_bound {
                Some(lb) => println!("spectral lower bound {lb:.10}"),
                None => println!("spectral lower bound: none for rank one"),
            }
        }
        Command::Oracle { depth, mesh } => {
            cfg.oracle.depth = depth.unwrap_or(cfg.oracle.depth);
            cfg.oracle.mesh = mesh.unwrap_or(cfg.oracle.mesh);
            let report = cmd_oracle(&cfg)?;
            println!("{}", oracle_summary(&report));
            report.status()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
