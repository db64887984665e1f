//! Minimal SVG output: meshes, per-triangle heatmaps and log-log convergence
//! plots.

use std::fmt::Write as _;

use ifem_core::{Mesh, RegionTag};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"14\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Maps `t` in `[0, 1]` onto a blue-white-red ramp.
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (40.0 + 215.0 * s, 80.0 + 175.0 * s, 200.0 + 55.0 * s)
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0, 255.0 - 200.0 * s, 255.0 - 215.0 * s)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// The mesh with triangles shaded by region, or by `values` when given, and
/// the discrete interface drawn on top.
pub fn mesh_svg(mesh: &Mesh, values: Option<&[f64]>) -> String {
    let d = mesh.domain;
    let scale = (SIZE - 2.0 * MARGIN) / d.width().max(d.height());
    let (w, h) = (d.width() * scale + 2.0 * MARGIN, d.height() * scale + 2.0 * MARGIN);
    let map = |p: ifem_core::Point2| (MARGIN + (p.x - d.x0) * scale, h - MARGIN - (p.y - d.y0) * scale);
    let stroke = (0.6f64).min(200.0 / (mesh.n_triangles() as f64).sqrt());
    let mut s = header(w, h);
    let range = values.map(|v| {
        let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        (lo, if hi > lo { hi - lo } else { 1.0 })
    });
    let _ = writeln!(s, "<g stroke=\"#333\" stroke-width=\"{stroke:.3}\" stroke-linejoin=\"round\">");
    for t in 0..mesh.n_triangles() {
        let fill = match (values, range) {
            (Some(v), Some((lo, span))) => ramp((v[t] - lo) / span),
            _ => match mesh.triangle_region[t] {
                RegionTag::Minus => "#c6dbef".to_string(),
                RegionTag::Plus => "#fdd9b5".to_string(),
            },
        };
        let c = mesh.corners(t).map(map);
        let _ = writeln!(
            s,
            "<path d=\"M{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}Z\" fill=\"{fill}\"/>",
            c[0].0, c[0].1, c[1].0, c[1].1, c[2].0, c[2].1
        );
    }
    s.push_str("</g>\n<g stroke=\"black\" stroke-width=\"2\">\n");
    for e in mesh.interface_edges() {
        let (a, b) = (map(mesh.vertices[e.v[0]]), map(mesh.vertices[e.v[1]]));
        let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\"/>", a.0, a.1, b.0, b.1);
    }
    s.push_str("</g>\n");
    if let Some((lo, span)) = range {
        let _ = writeln!(
            s,
            "<text x=\"{MARGIN}\" y=\"{:.0}\">min {lo:.4e} (blue), max {:.4e} (red)</text>",
            MARGIN / 2.0,
            lo + span
        );
    }
    s.push_str("</svg>\n");
    s
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Log-log line plot with decade grid lines.
pub fn loglog_svg(title: &str, x_label: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts().map(f).fold(f64::INFINITY, f64::min).log10().floor();
        let hi = pts().map(f).fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        if lo.is_finite() && hi.is_finite() {
            (lo, hi.max(lo + 1.0))
        } else {
            (0.0, 1.0)
        }
    };
    let ((x0, x1), (y0, y1)) = (bounds(|p| p.0), bounds(|p| p.1));
    let plot = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * plot;
    let py = |y: f64| SIZE - MARGIN - (y.log10() - y0) / (y1 - y0) * plot;
    let mut s = header(SIZE, SIZE);
    let _ = writeln!(s, "<text x=\"{}\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">{title}</text>", SIZE / 2.0);
    s.push_str("<g stroke=\"#ddd\">\n");
    for k in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(k));
        let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{MARGIN}\" x2=\"{x:.2}\" y2=\"{}\"/>", SIZE - MARGIN);
    }
    for k in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(k));
        let _ = writeln!(s, "<line x1=\"{MARGIN}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\"/>", SIZE - MARGIN);
    }
    s.push_str("</g>\n");
    for k in x0 as i32..=x1 as i32 {
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">1e{k}</text>", px(10f64.powi(k)), SIZE - MARGIN + 20.0);
    }
    for k in y0 as i32..=y1 as i32 {
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{k}</text>", MARGIN - 6.0, py(10f64.powi(k)) + 5.0);
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>", SIZE / 2.0, SIZE - 20.0);
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"black\"/>"
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", coords.join(" "));
        for c in &coords {
            let (x, y) = c.split_once(',').expect("coordinate pair");
            let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>");
        }
        let ly = MARGIN + 20.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{:.0}\">{}</text>",
            SIZE - MARGIN - 190.0,
            SIZE - MARGIN - 160.0,
            SIZE - MARGIN - 152.0,
            ly + 5.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}
