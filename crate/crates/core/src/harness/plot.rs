//! Mobility/safety scatter as a hand-written SVG 1.1 document.

use std::fmt::Write as _;
use std::path::Path;

use super::sweep::CellSummary;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub cva_deg: f64,
    pub t_grm: f64,
    pub t_loom: f64,
    pub mobility: f64,
    pub safety: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScatterOptions {
    /// Draw a short bar through each marker at the cell's CVA angle.
    pub cva_bars: bool,
}

/// Cells whose mean mobility and mean safety are both defined.
pub fn scatter_points(cells: &[CellSummary]) -> Vec<ScatterPoint> {
    cells
        .iter()
        .filter_map(|c| {
            Some(ScatterPoint {
                cva_deg: c.cva_deg,
                t_grm: c.t_grm,
                t_loom: c.t_loom,
                mobility: c.aggregate.mobility.mean?,
                safety: c.aggregate.safety.mean?,
                trials: c.aggregate.trials,
            })
        })
        .collect()
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn px(v: f64) -> f64 {
    MARGIN + v * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Hue over CVA in [0°, 90°].
fn cva_color(cva_deg: f64) -> String {
    let hue = 240.0 - 240.0 * (cva_deg / 90.0).clamp(0.0, 1.0);
    format!("hsl({hue:.0},70%,45%)")
}

pub fn render_scatter_svg(points: &[ScatterPoint], options: ScatterOptions) -> Result<String, HarnessError> {
    if points.is_empty() {
        return Err(HarnessError::EmptyPlot);
    }
    let total = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let (x, y) = (px(v), py(v));
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#ddd"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>"##,
            y0 = py(0.0),
            y1 = py(1.0),
            x0 = px(0.0),
            x1 = px(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{ty}" font-size="11" text-anchor="middle">{v:.1}</text><text x="{tx}" y="{yy}" font-size="11" text-anchor="end">{v:.1}</text>"#,
            ty = py(0.0) + 16.0,
            tx = px(0.0) - 6.0,
            yy = y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">mobility</text>"#,
        px(0.5),
        py(0.0) + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle" transform="rotate(-90 {x} {y})">safety</text>"#,
        x = px(0.0) - 40.0,
        y = py(0.5)
    );
    for p in points {
        let (cx, cy) = (px(p.mobility.clamp(0.0, 1.0)), py(p.safety.clamp(0.0, 1.0)));
        let color = cva_color(p.cva_deg);
        let _ = write!(
            s,
            r#"<g class="cell"><circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{color}" fill-opacity="0.8"/>"#
        );
        if options.cva_bars {
            let (dy, dx) = p.cva_deg.to_radians().sin_cos();
            let _ = write!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
                cx - 9.0 * dx,
                cy + 9.0 * dy,
                cx + 9.0 * dx,
                cy - 9.0 * dy
            );
        }
        let _ = writeln!(
            s,
            "<title>CVA {}°, T_grm {} rad/s, T_loom {} rad/s: mobility {:.3}, safety {:.3} over {} trials</title></g>",
            p.cva_deg, p.t_grm, p.t_loom, p.mobility, p.safety, p.trials
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_scatter_svg(points: &[ScatterPoint], path: &Path, options: ScatterOptions) -> Result<(), HarnessError> {
    let svg = render_scatter_svg(points, options)?;
    std::fs::write(path, svg).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(mobility: f64, safety: f64) -> ScatterPoint {
        ScatterPoint {
            cva_deg: 40.0,
            t_grm: 4.0,
            t_loom: 32.0,
            mobility,
            safety,
            trials: 50,
        }
    }

    #[test]
    fn marker_lands_on_its_coordinates() {
        let svg = render_scatter_svg(&[point(0.5, 0.95)], ScatterOptions::default()).unwrap();
        let cx = px(0.5);
        let cy = py(0.95);
        assert!(svg.contains(&format!(r#"cx="{cx:.2}" cy="{cy:.2}""#)), "{svg}");
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("<title>CVA 40°, T_grm 4 rad/s"));
        assert!(!svg.contains("stroke-width=\"2\""));
    }

    #[test]
    fn one_marker_per_point() {
        let pts: Vec<_> = (0..1000).map(|i| point((i % 37) as f64 / 37.0, (i % 11) as f64 / 11.0)).collect();
        let svg = render_scatter_svg(&pts, ScatterOptions { cva_bars: true }).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1000);
        assert_eq!(svg.matches("<title>").count(), 1000);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(render_scatter_svg(&[], ScatterOptions::default()), Err(HarnessError::EmptyPlot)));
    }
}
