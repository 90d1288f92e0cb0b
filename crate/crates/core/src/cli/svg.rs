//! Minimal SVG rendering of ROC bands: shaded band polygons, an optional
//! empirical staircase and the chance diagonal on the unit square.

use std::fmt::Write;

use crate::rocbands::RocBand;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One band to draw with its legend text.
#[derive(Debug, Clone, Copy)]
pub struct Layer<'a> {
    pub band: &'a RocBand,
    pub label: &'a str,
}

fn px(x: f64) -> f64 {
    MARGIN + x.clamp(0.0, 1.0) * SIZE
}

fn py(y: f64) -> f64 {
    MARGIN + (1.0 - y.clamp(0.0, 1.0)) * SIZE
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn points_attr(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    points
        .into_iter()
        .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Band outline: the lower envelope from (0, 0) to (1, 1), then the upper
/// envelope back.
fn band_polygon(band: &RocBand) -> Vec<(f64, f64)> {
    let n = band.len();
    let mut pts = vec![(0.0, 0.0)];
    pts.extend((0..n).rev().map(|i| (band.spe_up[i], band.sen_lo[i])));
    pts.push((1.0, 1.0));
    pts.extend((0..n).map(|i| (band.spe_lo[i], band.sen_up[i])));
    pts.dedup();
    pts
}

/// Renders `layers` (and the staircase `roc`, if given) as a standalone SVG
/// document. `metadata` lines go into a `<metadata>` element.
pub fn render(layers: &[Layer<'_>], roc: Option<&[(f64, f64)]>, title: &str, metadata: &[String]) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
    );
    if !metadata.is_empty() {
        let _ = writeln!(s, "<metadata>");
        for line in metadata {
            let _ = writeln!(s, "{}", escape(line));
        }
        let _ = writeln!(s, "</metadata>");
    }
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{full}" height="{full}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        full / 2.0,
        MARGIN / 2.0,
        escape(title)
    );

    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            px(t),
            py(0.0),
            px(t),
            py(1.0)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            px(0.0),
            py(t),
            px(1.0),
            py(t)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.1}</text>"#,
            px(t),
            py(0.0) + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.1}</text>"#,
            px(0.0) - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">False positive rate</text>"#,
        full / 2.0,
        full - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">True positive rate</text>"#,
        full / 2.0,
        full / 2.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );

    for (i, layer) in layers.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.3" stroke="{color}" stroke-width="1"/>"#,
            points_attr(band_polygon(layer.band))
        );
    }
    if let Some(points) = roc {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            points_attr(points.iter().copied())
        );
    }

    let mut entries: Vec<(&str, &str)> = layers
        .iter()
        .enumerate()
        .map(|(i, l)| (COLORS[i % COLORS.len()], l.label))
        .collect();
    if roc.is_some() {
        entries.push(("black", "empirical ROC"));
    }
    for (i, (color, label)) in entries.iter().enumerate() {
        let y = py(0.0) - 15.0 - 18.0 * (entries.len() - 1 - i) as f64;
        let x = px(0.55);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="14" height="10" fill="{color}" fill-opacity="0.5" stroke="{color}"/>"#,
            y - 9.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 20.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}
