//! SVG views of sweep reports: a step plot for one parameter, a heatmap for two.

use std::fmt::Write as _;
use std::path::Path;

use super::{SweepError, SweepReport};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn shade(count: usize, max: usize) -> String {
    if count == 0 || max == 0 {
        return "#ffffff".into();
    }
    let t = count as f64 / max as f64;
    let g = (220.0 - 160.0 * t).round() as u8;
    let r = (200.0 - 170.0 * t).round() as u8;
    format!("#{r:02x}{g:02x}ff")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
}

fn step_plot(rep: &SweepReport) -> String {
    let mut out = String::new();
    header(&mut out, &format!("sinks per parameter, N = {}", rep.depth));
    let alpha = rep.alpha;
    let max = rep.rows.iter().map(|r| r.sinks).max().unwrap_or(0).max(1) as f64;
    let px = |a: f64| MARGIN + (a + alpha) / (2.0 * alpha) * (WIDTH - 2.0 * MARGIN);
    let py = |c: f64| HEIGHT - MARGIN - c / max * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = HEIGHT - MARGIN,
        x2 = WIDTH - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{y}" stroke="black"/>"#,
        y = HEIGHT - MARGIN
    );
    if !rep.rows.is_empty() {
        let mut path = String::new();
        let n = rep.rows.len();
        for (i, row) in rep.rows.iter().enumerate() {
            let a = row.a[0];
            let lo = if i == 0 { a } else { 0.5 * (a + rep.rows[i - 1].a[0]) };
            let hi = if i + 1 == n { a } else { 0.5 * (a + rep.rows[i + 1].a[0]) };
            let y = py(row.sinks as f64);
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.3},{:.3} L{:.3},{:.3} ", px(lo), y, px(hi), y);
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.trim_end());
    }
    for l in &rep.lattice {
        let x = px(l.a0[0]);
        let colour = if l.enabled { "crimson" } else { "gray" };
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{colour}"/>"#,
            y = HEIGHT - MARGIN + 8.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{y}" font-family="sans-serif" font-size="11">{lo}</text>"#,
        y = HEIGHT - 10.0,
        lo = -alpha
    );
    let _ = writeln!(
        out,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{alpha}</text>"#,
        x = WIDTH - MARGIN,
        y = HEIGHT - 10.0
    );
    out.push_str("</svg>\n");
    out
}

fn heatmap(rep: &SweepReport) -> String {
    let mut out = String::new();
    header(&mut out, &format!("sinks over the parameter square, N = {}", rep.depth));
    let alpha = rep.alpha;
    let side = (HEIGHT - 2.0 * MARGIN).min(WIDTH - 2.0 * MARGIN);
    let x0 = (WIDTH - side) / 2.0;
    let y0 = MARGIN;
    let m = (rep.rows.len() as f64).sqrt().round().max(1.0);
    let cell = side / m;
    let max = rep.rows.iter().map(|r| r.sinks).max().unwrap_or(0);
    let px = |a: f64| x0 + (a + alpha) / (2.0 * alpha) * side;
    let py = |b: f64| y0 + side - (b + alpha) / (2.0 * alpha) * side;
    for row in &rep.rows {
        let cx = px(row.a[0]);
        let cy = py(row.a[1]);
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"/>"#,
            cx - cell / 2.0,
            cy - cell / 2.0,
            shade(row.sinks, max)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.3}" y="{y0:.3}" width="{side:.3}" height="{side:.3}" fill="none" stroke="black"/>"#
    );
    for l in &rep.lattice {
        let (x, y) = (px(l.a0[0]), py(l.a0[1]));
        let colour = if l.enabled { "crimson" } else { "gray" };
        let _ = writeln!(
            out,
            r#"<path d="M{:.3},{:.3} L{:.3},{:.3} M{:.3},{:.3} L{:.3},{:.3}" stroke="{colour}" stroke-width="1.5"/>"#,
            x - 3.0,
            y - 3.0,
            x + 3.0,
            y + 3.0,
            x - 3.0,
            y + 3.0,
            x + 3.0,
            y - 3.0
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(rep: &SweepReport) -> Result<String, SweepError> {
    match rep.k {
        1 => Ok(step_plot(rep)),
        2 => Ok(heatmap(rep)),
        k => Err(SweepError::Plot(format!("no plot for k = {k}"))),
    }
}

pub fn emit_plots(rep: &SweepReport, path: &Path) -> Result<(), SweepError> {
    let svg = render_svg(rep)?;
    std::fs::write(path, svg)?;
    Ok(())
}
