use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 24.0;
const LEGEND_WIDTH: f64 = 170.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(group: usize) -> &'static str {
    PALETTE[group % PALETTE.len()]
}

/// Renders a scatter of the first two columns, one `<circle>` per row, colored by label,
/// with a legend giving each group's rate.
pub fn scatter_svg(samples: &Tensor, labels: &[usize], groups: usize) -> Result<String> {
    let n = if samples.shape().len() == 2 { samples.rows() } else { 0 };
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} samples", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= groups) {
        return Err(Error::invalid(format!("label {bad} outside {groups} groups")));
    }
    let point = |i: usize| {
        let row = samples.row(i);
        (row[0], row.get(1).copied().unwrap_or(0.0))
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let (x, y) = point(i);
        if x.is_finite() && y.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if !(x0 <= x1) {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-9);
    let plot = WIDTH - 2.0 * PAD;
    let sx = |x: f64| PAD + (x - x0) / span * plot;
    let sy = |y: f64| HEIGHT - PAD - (y - y0) / span * plot;

    let mut counts = vec![0usize; groups];
    for &l in labels {
        counts[l] += 1;
    }

    let total_width = WIDTH + LEGEND_WIDTH;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_width}" height="{HEIGHT}" viewBox="0 0 {total_width} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{total_width}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{plot}" height="{plot}" fill="none" stroke="#cccccc"/>"##
    );
    let _ = writeln!(s, r#"<g id="markers">"#);
    for (i, &l) in labels.iter().enumerate() {
        let (x, y) = point(i);
        if x.is_finite() && y.is_finite() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.6"/>"#,
                sx(x),
                sy(y),
                color(l)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
    for (g, &c) in counts.iter().enumerate() {
        let rate = if n == 0 { 0.0 } else { c as f64 / n as f64 };
        let y = PAD + 18.0 * g as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#,
            WIDTH + 4.0,
            y,
            color(g)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">group {g}: {rate:.3} ({c})</text>"#,
            WIDTH + 20.0,
            y + 9.0
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_scatter_svg(samples: &Tensor, labels: &[usize], groups: usize, path: &Path) -> Result<()> {
    let svg = scatter_svg(samples, labels, groups)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sample_gives_legend_only() {
        let svg = scatter_svg(&Tensor::matrix(0, 2, vec![]).unwrap(), &[], 2).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 0);
        assert!(svg.contains("group 1: 0.000"));
        roxmltree::Document::parse(&svg).unwrap();
    }

    #[test]
    fn one_marker_per_sample() {
        let t = Tensor::from_rows(&[[0.0, 1.0], [2.0, -1.0], [3.0, 3.0]], 2).unwrap();
        let svg = scatter_svg(&t, &[0, 1, 1], 2).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
        assert_eq!(circles, 3);
        assert!(svg.contains("group 1: 0.667 (2)"));
    }

    #[test]
    fn higher_dimensions_use_first_two_columns() {
        let t = Tensor::from_rows(&[[0.1; 64], [0.9; 64]], 64).unwrap();
        let svg = scatter_svg(&t, &[0, 1], 2).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn label_mismatch_is_rejected() {
        let t = Tensor::from_rows(&[[0.0, 1.0]], 2).unwrap();
        assert!(scatter_svg(&t, &[], 2).is_err());
        assert!(scatter_svg(&t, &[3], 2).is_err());
    }
}
