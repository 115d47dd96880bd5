//! Output writers: CSV tables, JSON documents, SVG line plots, and raw
//! binary field snapshots. Every file lands atomically (written to a
//! sibling temp path, then renamed) and all numeric text uses the
//! shortest representation that parses back to the identical float, so
//! emitted tables are locale-independent and round-trip safe.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = PathBuf::from(path);
    let mut name = tmp.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", path.display()))?;
    Ok(())
}

/// Shortest decimal text that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        debug_assert_eq!(row.len(), headers.len(), "ragged csv row");
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    let bytes = w.into_inner()?;
    atomic_write(path, &bytes)
}

/// CSV with preformatted cells, for tables that mix text and numbers.
pub fn write_csv_records(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner()?;
    atomic_write(path, &bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

#[derive(Clone, Debug)]
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: &[&str] = &["#1f6feb", "#d1242f", "#2da44e", "#9a6700", "#8250df", "#57606a"];

/// Minimal deterministic line plot: fixed canvas, monospace text, six
/// stable colors, coordinates printed to six decimals.
pub fn write_svg_lines(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[SvgSeries],
) -> Result<()> {
    let (w, h, m) = (640.0, 440.0, 60.0);
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            lo.0 = lo.0.min(x);
            lo.1 = lo.1.min(y);
            hi.0 = hi.0.max(x);
            hi.1 = hi.1.max(y);
        }
    }
    if !lo.0.is_finite() {
        lo = (0.0, 0.0);
        hi = (1.0, 1.0);
    }
    for (a, b) in [(&mut lo.0, &mut hi.0), (&mut lo.1, &mut hi.1)] {
        if *b - *a < 1e-12 {
            *a -= 0.5;
            *b += 0.5;
        }
    }
    let sx = |x: f64| m + (x - lo.0) / (hi.0 - lo.0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - lo.1) / (hi.1 - lo.1) * (h - 2.0 * m);

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    )?;
    writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>")?;
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>",
        w / 2.0,
        xml_escape(title)
    )?;
    // axes
    writeln!(
        out,
        "<line x1=\"{m}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        h - m,
        w - m
    )?;
    writeln!(out, "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>", h - m)?;
    for i in 0..=4 {
        let fx = lo.0 + (hi.0 - lo.0) * i as f64 / 4.0;
        let fy = lo.1 + (hi.1 - lo.1) * i as f64 / 4.0;
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">{:.4}</text>",
            sx(fx),
            h - m + 16.0,
            fx
        )?;
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">{:.4}</text>",
            m - 6.0,
            sy(fy) + 3.0,
            fy
        )?;
    }
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">{}</text>",
        w / 2.0,
        h - 12.0,
        xml_escape(x_label)
    )?;
    writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        h / 2.0,
        h / 2.0,
        xml_escape(y_label)
    )?;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in &s.points {
            write!(pts, "{:.6},{:.6} ", sx(x), sy(y))?;
        }
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.trim_end()
        )?;
        writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - m - 150.0,
            m + 14.0 * (k as f64 + 1.0),
            xml_escape(&s.label)
        )?;
    }
    writeln!(out, "</svg>")?;
    atomic_write(path, out.as_bytes())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Serialize)]
struct SnapshotSidecar<'a> {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    time: f64,
    dtype: &'a str,
    endianness: &'a str,
    layout: &'a str,
}

/// Field snapshot: raw little-endian f64 grid plus a JSON sidecar that
/// says how to read it back.
pub fn write_snapshot(
    base: &Path,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    time: f64,
    data: &[f64],
) -> Result<(PathBuf, PathBuf)> {
    assert_eq!(data.len(), nx * ny, "snapshot size mismatch");
    let bin = base.with_extension("bin");
    let side = base.with_extension("json");
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    atomic_write(&bin, &bytes)?;
    write_json(
        &side,
        &SnapshotSidecar {
            nx,
            ny,
            dx,
            dy,
            time,
            dtype: "f64",
            endianness: "little",
            layout: "row-major x-fastest",
        },
    )?;
    Ok((bin, side))
}
