use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use treespec::spectrum::Abscissa;
use treespec::{Band, SpectralSample};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn scan_csv(samples: &[SpectralSample], rank: usize) -> String {
    let mut out = String::from("sigma,sqrt_sigma");
    for m in 1..=rank {
        write!(out, ",re_mu_{m},im_mu_{m},arg_mu_{m},log10_abs_mu_{m}").unwrap();
    }
    out.push_str(",classification,epsilon_used\n");
    for s in samples {
        out.push_str(&num(s.sigma));
        out.push(',');
        out.push_str(&num(s.sigma.sqrt()));
        for mu in &s.mu_plus {
            for v in [mu.re, mu.im, mu.arg(), mu.norm().log10()] {
                out.push(',');
                out.push_str(&num(v));
            }
        }
        write!(out, ",{},{}\n", s.classification.as_str(), num(s.epsilon_used)).unwrap();
    }
    out
}

pub fn bands_csv(bands: &[Band]) -> String {
    let mut out = String::from("lower,upper,resolution\n");
    for b in bands {
        writeln!(out, "{},{},{}", num(b.lower), num(b.upper), num(b.resolution)).unwrap();
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 900.0;
const PANEL: f64 = 300.0;
const MARGIN: f64 = 60.0;

struct Panel {
    top: f64,
    lo: f64,
    hi: f64,
}

impl Panel {
    fn y(&self, v: f64) -> f64 {
        let t = if self.hi > self.lo { (v - self.lo) / (self.hi - self.lo) } else { 0.5 };
        self.top + PANEL * (1.0 - t)
    }
}

/// Two stacked panels, `arg μ_m` over `log10 |μ_m|`, against `σ` or `√σ`,
/// with the bands shaded.
pub fn scan_svg(samples: &[SpectralSample], bands: &[Band], rank: usize, abscissa: Abscissa) -> String {
    let coord = |sigma: f64| match abscissa {
        Abscissa::Sigma => sigma,
        Abscissa::SqrtSigma => sigma.sqrt(),
    };
    let (x0, x1) = match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => (coord(a.sigma), coord(b.sigma)),
        _ => (0.0, 1.0),
    };
    let px = |x: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    let logs: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.mu_plus.iter().map(|m| m.norm().log10()))
        .filter(|v| v.is_finite())
        .collect();
    let lmin = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lmin, lmax) = if lmin.is_finite() { (lmin, lmax.max(lmin + 1e-12)) } else { (-1.0, 0.0) };
    let panels = [
        (Panel { top: MARGIN, lo: -std::f64::consts::PI, hi: std::f64::consts::PI }, "arg μ"),
        (Panel { top: 2.0 * MARGIN + PANEL, lo: lmin, hi: lmax }, "log10 |μ|"),
    ];
    let height = 3.0 * MARGIN + 2.0 * PANEL;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{height}" fill="white"/>"#).unwrap();
    let xlabel = match abscissa {
        Abscissa::Sigma => "σ",
        Abscissa::SqrtSigma => "√σ",
    };
    for (panel, label) in &panels {
        for b in bands {
            let (a, c) = (px(coord(b.lower)), px(coord(b.upper)));
            writeln!(
                svg,
                r##"<rect x="{a:.2}" y="{:.2}" width="{:.2}" height="{PANEL}" fill="#dddddd"/>"##,
                panel.top,
                (c - a).max(0.5)
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{:.2}" width="{:.2}" height="{PANEL}" fill="none" stroke="black"/>"#,
            panel.top,
            WIDTH - 2.0 * MARGIN
        )
        .unwrap();
        writeln!(svg, r#"<text x="8" y="{:.2}">{label}</text>"#, panel.top + PANEL / 2.0).unwrap();
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#, MARGIN - 4.0, panel.top + 10.0, panel.hi)
            .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            panel.top + PANEL,
            panel.lo
        )
        .unwrap();
    }
    let base = 2.0 * MARGIN + 2.0 * PANEL;
    writeln!(svg, r#"<text x="{MARGIN}" y="{:.2}">{x0:.3}</text>"#, base + 16.0).unwrap();
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{x1:.3}</text>"#, WIDTH - MARGIN, base + 16.0).unwrap();
    writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, WIDTH / 2.0, base + 32.0).unwrap();

    for m in 0..rank {
        let color = COLORS[m % COLORS.len()];
        for (k, (panel, _)) in panels.iter().enumerate() {
            // arguments are plotted raw, so jumps across ±π stay visible
            let mut d = String::new();
            let mut pen_down = false;
            for s in samples {
                let mu = s.mu_plus[m];
                let v = if k == 0 { mu.arg() } else { mu.norm().log10() };
                if !v.is_finite() {
                    pen_down = false;
                    continue;
                }
                let cmd = if pen_down { 'L' } else { 'M' };
                write!(d, "{cmd}{:.2} {:.2} ", px(coord(s.sigma)), panel.y(v)).unwrap();
                pen_down = true;
            }
            writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end()).unwrap();
        }
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">μ{}</text>"#,
            WIDTH - MARGIN + 8.0,
            MARGIN + 16.0 * (m as f64 + 1.0),
            m + 1
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
