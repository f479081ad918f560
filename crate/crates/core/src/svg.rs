//! SVG 1.1 output: sweep heatmaps with boundary overlays and fast-subsystem
//! phase portraits.

use std::fmt::Write as _;

use crate::boundaries::{BoundaryCurve, BoundaryKind};
use crate::error::{Error, Result};
use crate::fast_subsystem::BasinLabel;
use crate::sweep::SweepGrid;

const LEFT: f64 = 70.0;
const TOP: f64 = 20.0;
const PLOT: f64 = 600.0;
const BOTTOM: f64 = 60.0;
const RIGHT: f64 = 20.0;

/// Grey level for a crossing count, black at `n = 0` to near-white at `n = 4`.
pub fn grey_for_count(n: u32) -> Option<u8> {
    [0u8, 64, 128, 192, 240].get(n as usize).copied()
}

fn header(out: &mut String, config: &serde_json::Value) -> Result<()> {
    let w = LEFT + PLOT + RIGHT;
    let h = TOP + PLOT + BOTTOM;
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).ok();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .ok();
    let cfg = serde_json::to_string(config)?.replace("]]>", "]]]]><![CDATA[>");
    writeln!(out, "<metadata><![CDATA[{cfg}]]></metadata>").ok();
    Ok(())
}

/// Linear map from data coordinates to the plot square.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x0) / (self.x1 - self.x0) * PLOT
    }

    fn y(&self, v: f64) -> f64 {
        TOP + PLOT - (v - self.y0) / (self.y1 - self.y0) * PLOT
    }
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    )
    .ok();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x0 + t * (f.x1 - f.x0);
        let yv = f.y0 + t * (f.y1 - f.y0);
        let (xp, yp) = (f.x(xv), f.y(yv));
        let base = TOP + PLOT;
        writeln!(out, r#"<line x1="{xp:.2}" y1="{base}" x2="{xp:.2}" y2="{}" stroke="black"/>"#, base + 5.0).ok();
        writeln!(
            out,
            r#"<text x="{xp:.2}" y="{}" font-size="12" text-anchor="middle">{xv:.3}</text>"#,
            base + 20.0
        )
        .ok();
        writeln!(out, r#"<line x1="{}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/>"#, LEFT - 5.0).ok();
        writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{yv:.3}</text>"#,
            LEFT - 8.0,
            yp + 4.0
        )
        .ok();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{x_label}</text>"#,
        LEFT + PLOT / 2.0,
        TOP + PLOT + 45.0
    )
    .ok();
    writeln!(
        out,
        r#"<text x="18" y="{0}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {0})">{y_label}</text>"#,
        TOP + PLOT / 2.0
    )
    .ok();
}

/// Cell edges for a uniform axis: midpoints between samples, padded by half
/// a step at each end.
fn half_step(v: &[f64]) -> f64 {
    if v.len() > 1 {
        (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 / 2.0
    } else {
        0.5
    }
}

/// Renders a sweep as a greyscale heatmap with boundary polylines on top.
/// Failed cells are hatched.
pub fn heatmap(grid: &SweepGrid, overlays: &[BoundaryCurve], config: &serde_json::Value) -> Result<String> {
    let (pr, df) = (&grid.axes.pr, &grid.axes.df);
    if grid.cells.is_empty() || pr.is_empty() || df.is_empty() {
        return Err(Error::Domain("cannot render an empty grid".into()));
    }
    let (hx, hy) = (half_step(pr), half_step(df));
    let f = Frame { x0: pr[0] - hx, x1: pr[pr.len() - 1] + hx, y0: df[0] - hy, y1: df[df.len() - 1] + hy };
    let mut out = String::new();
    header(&mut out, config)?;
    out.push_str(concat!(
        r#"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">"#,
        r#"<rect width="6" height="6" fill="white"/><line x1="0" y1="0" x2="0" y2="6" stroke="red" stroke-width="2"/>"#,
        "</pattern></defs>\n"
    ));
    out.push_str("<g shape-rendering=\"crispEdges\">\n");
    for c in &grid.cells {
        let fill = match (c.label.is_failed(), c.n.and_then(grey_for_count)) {
            (false, Some(g)) => format!("rgb({g},{g},{g})"),
            _ => "url(#hatch)".to_string(),
        };
        let (x, y) = (f.x(c.pr_hz - hx), f.y(c.df + hy));
        let (w, h) = (f.x(c.pr_hz + hx) - x, f.y(c.df - hy) - y);
        writeln!(
            out,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"><title>{} {:.4} {:.4}</title></rect>"#,
            c.label, c.pr_hz, c.df
        )
        .ok();
    }
    out.push_str("</g>\n");
    draw_curves(&mut out, &f, overlays);
    axes(&mut out, &f, "PR (Hz)", "df");
    out.push_str("</svg>\n");
    Ok(out)
}

fn draw_curves(out: &mut String, f: &Frame, overlays: &[BoundaryCurve]) {
    for curve in overlays {
        let color = match curve.kind {
            BoundaryKind::Coherence => "blue",
            BoundaryKind::Fission => "red",
        };
        // break the line wherever the curve leaves the plot through the axis
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for p in &curve.points {
            if p.below_axis || p.pr < f.x0 || p.pr > f.x1 {
                if !runs.last().is_some_and(Vec::is_empty) {
                    runs.push(Vec::new());
                }
                continue;
            }
            let y = p.df.clamp(f.y0, f.y1);
            runs.last_mut().expect("nonempty").push((f.x(p.pr), f.y(y)));
        }
        for run in runs.iter().filter(|r| r.len() > 1) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
            writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            )
            .ok();
        }
    }
}

/// Renders boundary curves alone on the `(PR, df)` plane.
pub fn boundary_plot(curves: &[BoundaryCurve], config: &serde_json::Value) -> Result<String> {
    let prs = curves.iter().flat_map(|c| c.points.iter().map(|p| p.pr));
    let (lo, hi) = prs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::Domain("boundary curves span no rate range".into()));
    }
    let f = Frame { x0: lo, x1: hi, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    header(&mut out, config)?;
    draw_curves(&mut out, &f, curves);
    axes(&mut out, &f, "PR (Hz)", "df");
    out.push_str("</svg>\n");
    Ok(out)
}

/// A labelled sample of the fast `(u_A, u_B)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasinSample {
    pub ua: f64,
    pub ub: f64,
    pub label: BasinLabel,
}

/// Renders a fast-subsystem phase portrait on the unit square: basin
/// samples, the separatrix polyline and the saddle point.
pub fn phase_portrait(
    samples: &[BasinSample],
    separatrix: &[(f64, f64)],
    saddle: Option<(f64, f64)>,
    config: &serde_json::Value,
) -> Result<String> {
    if samples.is_empty() {
        return Err(Error::Domain("no basin samples to render".into()));
    }
    let f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    header(&mut out, config)?;
    let r = (PLOT / (samples.len() as f64).sqrt() / 2.5).clamp(0.8, 6.0);
    for s in samples {
        let fill = match s.label {
            BasinLabel::Off => "rgb(60,60,60)",
            BasinLabel::On => "rgb(230,180,40)",
            BasinLabel::Boundary => "red",
        };
        writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="{r:.2}" fill="{fill}"/>"#, f.x(s.ua), f.y(s.ub)).ok();
    }
    if separatrix.len() > 1 {
        let pts: Vec<String> = separatrix
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", f.x(x.clamp(0.0, 1.0)), f.y(y.clamp(0.0, 1.0))))
            .collect();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="blue" stroke-width="2"/>"#,
            pts.join(" ")
        )
        .ok();
    }
    if let Some((x, y)) = saddle {
        writeln!(
            out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="5" fill="white" stroke="blue" stroke-width="2"/>"#,
            f.x(x),
            f.y(y)
        )
        .ok();
    }
    axes(&mut out, &f, "u_A", "u_B");
    out.push_str("</svg>\n");
    Ok(out)
}
