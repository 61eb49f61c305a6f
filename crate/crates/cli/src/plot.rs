//! Deterministic SVG line charts of `bounds.csv`.
//!
//! Undriven runs get one panel (Q, Q_u, T_R dCoh, -T_R dS_diag); driven runs
//! get two (heat and its bounds; beta_R, W and -Q_u~). Missing cells break
//! the polyline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::output::{Meta, Table};

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, Option<f64>)>,
}

impl Series {
    fn new(label: &str, t: &[f64], y: impl IntoIterator<Item = Option<f64>>) -> Self {
        Self {
            label: label.into(),
            points: t.iter().copied().zip(y).collect(),
        }
    }
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub series: Vec<Series>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    }
}

/// Roughly five "nice" ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * (1.0 + lo.abs());
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn draw_panel(svg: &mut String, panel: &Panel, x0: f64) {
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let (px, py) = (x0 + MARGIN_L, MARGIN_T);
    let (xlo, xhi) = range(
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0)),
    );
    let (ylo, yhi) = range(
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|p| p.1)),
    );
    let sx = |x: f64| px + (x - xlo) / (xhi - xlo) * w;
    let sy = |y: f64| py + h - (y - ylo) / (yhi - ylo) * h;

    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"##,
        px + w / 2.0,
        py - 12.0,
        esc(&panel.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{px:.2}" y="{py:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#000"/>"##
    );
    for t in ticks(xlo, xhi) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
            py + h,
            py + h + 5.0,
            py + h + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(ylo, yhi) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{px:.2}" y2="{y:.2}" stroke="#000"/><line x1="{px:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
            px - 5.0,
            px + w,
            px - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"##,
        px + w / 2.0,
        py + h + 38.0,
        esc(&panel.x_label)
    );

    let legend_w = 40.0
        + 6.5
            * panel
                .series
                .iter()
                .map(|s| s.label.len())
                .max()
                .unwrap_or(0) as f64;
    // the legend goes on top of the curves
    let mut legend = String::new();
    let _ = writeln!(
        legend,
        r##"<rect x="{:.2}" y="{:.2}" width="{legend_w:.2}" height="{:.2}" fill="#fff" fill-opacity="0.85"/>"##,
        px + 4.0,
        py + 4.0,
        16.0 * panel.series.len() as f64 + 4.0
    );
    for (k, s) in panel.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, svg: &mut String| {
            if run.len() >= 2 {
                let _ = writeln!(
                    svg,
                    r##"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"##,
                    run.join(" ")
                );
            } else if let Some(p) = run.first() {
                let (x, y) = p.split_once(',').expect("point");
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x}" cy="{y}" r="1.5" fill="{color}"/>"##
                );
            }
            run.clear();
        };
        for &(x, y) in &s.points {
            match y.filter(|v| v.is_finite()) {
                Some(y) => run.push(format!("{:.2},{:.2}", sx(x), sy(y))),
                None => flush(&mut run, svg),
            }
        }
        flush(&mut run, svg);
        let ly = py + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            legend,
            r##"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"##,
            px + 8.0,
            px + 28.0,
            px + 32.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
    svg.push_str(&legend);
}

/// Panels side by side in one SVG 1.1 document.
pub fn render(panels: &[Panel]) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    for (k, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, PANEL_W * k as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

fn deltas(v: &[f64], scale: f64) -> Vec<Option<f64>> {
    v.iter().map(|x| Some(scale * (x - v[0]))).collect()
}

fn load(dir: &Path) -> Result<(Table, Meta), CliError> {
    let table = Table::read(&dir.join("bounds.csv"))?;
    table.check_schema()?;
    if table.is_empty() {
        return Err(CliError::Schema("bounds.csv has no rows".into()));
    }
    let meta = Meta::read(&dir.join("meta.json"))?;
    if meta.driven != table.is_driven() {
        return Err(CliError::Schema(
            "meta.json and bounds.csv disagree on driving".into(),
        ));
    }
    Ok((table, meta))
}

fn panels_for(table: &Table, meta: &Meta) -> Result<Vec<Panel>, CliError> {
    let t = table.required("t")?;
    let q = table.required("Q")?;
    let coh = table.required("Coh")?;
    let tr = meta.reference.temperature_r0;
    let x_label = format!("t [{}]", meta.units.time);
    let mut heat = vec![Series::new("Q", &t, q.iter().copied().map(Some))];
    if table.is_driven() {
        heat.push(Series::new(
            "-T dS (lower)",
            &t,
            table.optional("lp_lower")?.to_vec(),
        ));
        heat.push(Series::new(
            "Q_u~ + W (upper)",
            &t,
            table.optional("upper")?.to_vec(),
        ));
        if let Some(tr) = tr {
            heat.push(Series::new("T_R(0) dCoh", &t, deltas(&coh, tr)));
        }
        let neg_qu: Vec<Option<f64>> = table
            .optional("Qu_tilde")?
            .iter()
            .map(|v| v.map(|x| -x))
            .collect();
        let second = Panel {
            title: "reference temperature and work".into(),
            x_label: x_label.clone(),
            series: vec![
                Series::new("beta_R(t)", &t, table.optional("beta_R_t")?.to_vec()),
                Series::new("W", &t, table.optional("W")?.to_vec()),
                Series::new("-Q_u~", &t, neg_qu),
            ],
        };
        Ok(vec![
            Panel {
                title: format!("{}: heat and bounds", meta.scenario),
                x_label,
                series: heat,
            },
            second,
        ])
    } else {
        heat.push(Series::new("Q_u", &t, table.optional("Q_u")?.to_vec()));
        if let Some(tr) = tr {
            let s_diag = table.required("S_diag")?;
            heat.push(Series::new("T_R dCoh", &t, deltas(&coh, tr)));
            heat.push(Series::new("-T_R dS_diag", &t, deltas(&s_diag, -tr)));
        }
        Ok(vec![Panel {
            title: format!("{}: heat and bound", meta.scenario),
            x_label,
            series: heat,
        }])
    }
}

/// Writes `bounds.svg` next to the run's `bounds.csv` and `meta.json`.
pub fn emit_plots(dir: &Path) -> Result<PathBuf, CliError> {
    let (table, meta) = load(dir)?;
    let panels = panels_for(&table, &meta)?;
    let path = dir.join("bounds.svg");
    std::fs::write(&path, render(&panels))?;
    Ok(path)
}

/// One panel per sweep entry with Q and T_R(0) dCoh; written to `out/sweep.svg`.
pub fn emit_sweep_plot(out: &Path, parts: &[(String, PathBuf)]) -> Result<PathBuf, CliError> {
    let panels = parts
        .iter()
        .map(|(label, dir)| {
            let (table, meta) = load(dir)?;
            let t = table.required("t")?;
            let mut series = vec![Series::new("Q", &t, table.optional("Q")?.to_vec())];
            if let Some(tr) = meta.reference.temperature_r0 {
                series.push(Series::new(
                    "T_R(0) dCoh",
                    &t,
                    deltas(&table.required("Coh")?, tr),
                ));
            }
            Ok(Panel {
                title: label.clone(),
                x_label: format!("t [{}]", meta.units.time),
                series,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let path = out.join("sweep.svg");
    std::fs::write(&path, render(&panels))?;
    Ok(path)
}
