//! CSV, SVG and echo files.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`, so a parse/write cycle reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::grid::{path_means, GapRecord, GridOutput, MeanRecord, ThroughputRecord};
use super::HarnessError;
use crate::textio::fmt_f64;

pub const GAP_HEADER: [&str; 9] = ["method", "m", "n", "sigma", "lambda", "path", "iter", "gap", "elapsed_ms"];
pub const MEAN_HEADER: [&str; 8] = ["method", "m", "n", "sigma", "lambda", "iter", "mean_gap", "paths"];
pub const THROUGHPUT_HEADER: [&str; 5] = ["method", "player", "path", "iter", "R"];

/// Values at or below this are drawn at `log10 = −16`.
pub const LOG_CLAMP: f64 = 1e-16;

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

fn csv_text<const K: usize>(header: [&str; K], rows: impl Iterator<Item = [String; K]>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii fields")
}

pub fn gap_csv(records: &[GapRecord]) -> String {
    csv_text(
        GAP_HEADER,
        records.iter().map(|r| {
            [
                r.method.clone(),
                r.m.to_string(),
                r.n.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.lambda),
                r.path.to_string(),
                r.iter.to_string(),
                fmt_f64(r.gap),
                fmt_f64(r.elapsed_ms),
            ]
        }),
    )
}

pub fn mean_csv(records: &[MeanRecord]) -> String {
    csv_text(
        MEAN_HEADER,
        records.iter().map(|r| {
            [
                r.method.clone(),
                r.m.to_string(),
                r.n.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.lambda),
                r.iter.to_string(),
                fmt_f64(r.mean_gap),
                r.paths.to_string(),
            ]
        }),
    )
}

pub fn throughput_csv(records: &[ThroughputRecord]) -> String {
    csv_text(
        THROUGHPUT_HEADER,
        records.iter().map(|r| [r.method.clone(), r.player.to_string(), r.path.to_string(), r.iter.to_string(), fmt_f64(r.rate)]),
    )
}

pub fn write_csv(records: &[GapRecord], path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, gap_csv(records)).map_err(io(path))
}

/// Parses a gap CSV; the header must match exactly.
pub fn parse_gap_csv(text: &str) -> Result<Vec<GapRecord>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| HarnessError::Config { line: Some(1), key: None, msg: e.to_string() })?;
    if header.iter().ne(GAP_HEADER) {
        return Err(HarnessError::Config {
            line: Some(1),
            key: None,
            msg: format!("expected header `{}`", GAP_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row| {
            row.map_err(|e| HarnessError::Config {
                line: e.position().map(|p| p.line() as usize),
                key: None,
                msg: e.to_string(),
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<GapRecord>, HarnessError> {
    parse_gap_csv(&std::fs::read_to_string(path).map_err(io(path))?)
}

const PALETTE: [&str; 8] = ["#1f4e9c", "#111111", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#17a2b8", "#7f8c8d"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 56.0;
const LEGEND_H: f64 = 28.0;

fn series_label(method: &str, lambda: f64) -> String {
    if method == "mel" {
        format!("mel λ={lambda}")
    } else {
        method.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plot of `log10` path-mean gap against iteration: one panel per
/// `(m, n, σ)` cell and one line per `(method, λ)`.
pub fn svg_string(records: &[GapRecord]) -> String {
    let means = path_means(records);
    type SeriesKey = (String, u64);
    type Panel = BTreeMap<SeriesKey, Vec<(f64, f64)>>;
    let mut panels: BTreeMap<(usize, usize, u64), Panel> = BTreeMap::new();
    let mut series_order: Vec<SeriesKey> = Vec::new();
    for r in &means {
        let key = (r.method.clone(), r.lambda.to_bits());
        if !series_order.contains(&key) {
            series_order.push(key.clone());
        }
        let y = r.mean_gap.max(LOG_CLAMP).log10();
        panels.entry((r.m, r.n, r.sigma.to_bits())).or_default().entry(key).or_default().push((r.iter as f64, y));
    }

    let cols = panels.len().clamp(1, 3);
    let rows = panels.len().div_ceil(cols).max(1);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H + LEGEND_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (k, key) in series_order.iter().enumerate() {
        let x = 10.0 + k as f64 * 110.0;
        let color = PALETTE[k % PALETTE.len()];
        let label = escape(&series_label(&key.0, f64::from_bits(key.1)));
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{x}" y1="14" x2="{}" y2="14" stroke="{color}" stroke-width="2"/><text x="{}" y="18">{label}</text></g>"#,
            x + 18.0,
            x + 22.0
        );
    }

    for (idx, ((m, n, sigma), series)) in panels.iter().enumerate() {
        let ox = (idx % cols) as f64 * PANEL_W;
        let oy = LEGEND_H + (idx / cols) as f64 * PANEL_H;
        let pts = series.values().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        y0 = y0.floor();
        y1 = y1.ceil();
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let (px0, px1) = (ox + MARGIN, ox + PANEL_W - 12.0);
        let (py0, py1) = (oy + PANEL_H - 36.0, oy + 24.0);
        let sx = |x: f64| px0 + (x - x0) / (x1 - x0) * (px1 - px0);
        let sy = |y: f64| py0 + (y - y0) / (y1 - y0) * (py1 - py0);

        let _ = writeln!(s, r#"<g class="panel">"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">m={m} n={n} σ={}</text>"#,
            (px0 + px1) / 2.0,
            oy + 14.0,
            f64::from_bits(*sigma)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{px0}" y="{py1}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
            px1 - px0,
            py0 - py1
        );
        let step = ((y1 - y0) / 6.0).ceil().max(1.0);
        let mut tick = y0;
        while tick <= y1 + 1e-9 {
            let y = sy(tick);
            let _ = writeln!(
                s,
                r##"<line x1="{px0}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{tick}</text>"##,
                px0 - 4.0,
                px0 - 6.0,
                y + 4.0
            );
            tick += step;
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">iteration (0 to {x1})</text><text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">log10 mean gap</text>"#,
            (px0 + px1) / 2.0,
            py0 + 26.0,
            ox + 14.0,
            (py0 + py1) / 2.0,
            ox + 14.0,
            (py0 + py1) / 2.0
        );
        for (key, points) in series {
            let k = series_order.iter().position(|o| o == key).unwrap_or(0);
            let color = PALETTE[k % PALETTE.len()];
            if points.len() == 1 {
                let (x, y) = points[0];
                let _ = writeln!(s, r#"<circle class="series" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            } else {
                let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_svg(records: &[GapRecord], path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, svg_string(records)).map_err(io(path))
}

/// Resolved configuration followed by the conventions in effect.
pub fn echo_text(config: &ExperimentConfig) -> String {
    let mut s = String::from("# resolved configuration\n");
    s.push_str(&config.to_toml());
    s.push_str("\n# conventions\n");
    let g = &config.grid;
    for (k, v) in [
        ("init", "Y0 = 0, X0 = mirror(0) per block"),
        ("mirror_map", "gibbs state with slack dimension for tr X <= p"),
        ("gap", "strong gap against the original mapping F, also for mel"),
        ("gap_point", "averaged iterate for am-smd, last iterate otherwise"),
        ("noise", "hermitianized complex gaussian, entry variance sigma^2"),
        ("oracle_bound", "empirical sup of E||Phi||_2^2 over feasible probes, safety factor 1.5, full oracle"),
        ("stepsize_dimension", "total dimension of all blocks"),
        ("log", "natural"),
        ("channel_seed", "base_seed xor hash(m, n, path); shared across methods and sigmas"),
        ("noise_seed", "base_seed xor hash(method, lambda, m, n, sigma, path)"),
    ] {
        let _ = writeln!(s, "{k} = \"{v}\"");
    }
    let _ = writeln!(s, "resample_channels = {}", g.resample_channels);
    let _ = writeln!(s, "elapsed_ms = \"{}\"", if g.record_timing { "wall clock" } else { "zero (timing off)" });
    s
}

/// Files written by [`write_outputs`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputFiles {
    pub gaps: PathBuf,
    pub means: PathBuf,
    pub plot: PathBuf,
    pub echo: PathBuf,
    pub throughput: Option<PathBuf>,
}

/// Writes `<name>.csv`, `<name>.mean.csv`, `<name>.svg`, `config.echo.txt`
/// and, when recorded, `throughput.csv` into `dir`.
pub fn write_outputs(config: &ExperimentConfig, output: &GridOutput, dir: &Path) -> Result<OutputFiles, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let name = &config.grid.name;
    let files = OutputFiles {
        gaps: dir.join(format!("{name}.csv")),
        means: dir.join(format!("{name}.mean.csv")),
        plot: dir.join(format!("{name}.svg")),
        echo: dir.join("config.echo.txt"),
        throughput: config.grid.record_throughput.then(|| dir.join("throughput.csv")),
    };
    write_csv(&output.records, &files.gaps)?;
    std::fs::write(&files.means, mean_csv(&path_means(&output.records))).map_err(io(&files.means))?;
    render_svg(&output.records, &files.plot)?;
    std::fs::write(&files.echo, echo_text(config)).map_err(io(&files.echo))?;
    if let Some(p) = &files.throughput {
        std::fs::write(p, throughput_csv(&output.throughput)).map_err(io(p))?;
    }
    Ok(files)
}
