use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dissipative_spin::ModelParams;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Provenance columns carried by every data row.
pub const PROVENANCE: [&str; 6] = ["two_j", "p", "gamma", "gamma0", "h", "M"];

pub fn provenance(params: &ModelParams, m: &str) -> Vec<String> {
    vec![
        params.two_j().to_string(),
        fmt_f64(params.p),
        fmt_f64(params.gamma),
        fmt_f64(params.gamma0),
        fmt_f64(params.h),
        m.to_string(),
    ]
}

/// Header-first CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)
            .with_context(|| format!("writing {}", path.display()))?;
        for row in &self.rows {
            w.write_record(row)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// A named point set for [`Svg::scatter`].
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    pub line: bool,
}

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Minimal static plot: axes, ticks, points or polylines, a legend.
pub struct Svg {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

impl Svg {
    const W: f64 = 640.0;
    const H: f64 = 440.0;
    const PAD: f64 = 60.0;

    pub fn scatter(&self, series: &[Series], path: &Path) -> Result<PathBuf> {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let pts: Vec<(f64, f64)> = series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        if y1 - y0 <= 0.0 {
            (y0, y1) = (y0 - 0.5, y1 + 0.5);
        }
        let (w, h, pad) = (Self::W, Self::H, Self::PAD);
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        let io = |e: std::io::Error| anyhow::Error::new(e).context(format!("writing {}", path.display()));
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        )
        .map_err(io)?;
        writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).map_err(io)?;
        writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        )
        .map_err(io)?;
        writeln!(
            out,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        )
        .map_err(io)?;
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * f64::from(k) / 4.0;
            let fy = y0 + (y1 - y0) * f64::from(k) / 4.0;
            let lx = if self.log_x {
                format!("1e{fx:.1}")
            } else {
                format!("{fx:.3}")
            };
            let ly = if self.log_y {
                format!("1e{fy:.1}")
            } else {
                format!("{fy:.3}")
            };
            writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{lx}</text>"#,
                sx(fx),
                h - pad + 16.0
            )
            .map_err(io)?;
            writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ly}</text>"#,
                pad - 6.0,
                sy(fy) + 4.0
            )
            .map_err(io)?;
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 14.0,
            escape(&self.x_label)
        )
        .map_err(io)?;
        writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        )
        .map_err(io)?;
        for (i, s) in series.iter().enumerate() {
            let mapped: Vec<(f64, f64)> = s
                .points
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (sx(x), sy(y)))
                .collect();
            if s.line {
                let d: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    s.color,
                    d.join(" ")
                )
                .map_err(io)?;
            } else {
                for (x, y) in mapped {
                    writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{}"/>"#, s.color).map_err(io)?;
                }
            }
            let ly = pad + 14.0 + 14.0 * i as f64;
            writeln!(
                out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
                w - pad - 150.0,
                ly - 9.0,
                s.color,
                w - pad - 135.0,
                ly,
                escape(&s.name)
            )
            .map_err(io)?;
        }
        writeln!(out, "</svg>").map_err(io)?;
        out.flush().map_err(io)?;
        Ok(path.to_path_buf())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -0.133975, 1.0 / 3.0, 6.02e23, -1e-300] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn provenance_columns() {
        let p = ModelParams::new(7, 1.0, 2.0, 0.5, -0.25).unwrap();
        let row = provenance(&p, "3");
        assert_eq!(row.len(), PROVENANCE.len());
        assert_eq!(row[0], "7");
        assert_eq!(row[5], "3");
    }
}
