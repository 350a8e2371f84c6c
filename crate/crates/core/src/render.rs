//! Minimal report emitters: a waterfall SVG for one explanation and a
//! bar-chart CSV for pairwise explanations.

use std::fmt::Write;

use crate::model::ExplanationVector;
use crate::scalar::Scalar;

const WIDTH: f64 = 640.0;
const MARGIN_LEFT: f64 = 140.0;
const MARGIN_RIGHT: f64 = 40.0;
const ROW: f64 = 28.0;
const TOP: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Waterfall chart: starts at the baseline, walks one horizontal arrow per
/// feature (largest `|φ|` first), and ends at the reconstruction.
///
/// The root element carries `data-origin` and `data-scale` so that any
/// abscissa maps back to a value via `(x − origin) / scale`; every arrow's
/// length is `scale · |φ|` and the `final` line sits at the reconstruction.
/// Arrows in the helpful direction are red: increases, or decreases when
/// `lower_is_better` (ranks).
pub fn waterfall_svg<T: Scalar>(
    expl: &ExplanationVector<T>,
    feature_names: &[String],
    title: &str,
    lower_is_better: bool,
) -> String {
    let d = expl.d();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (expl.contributions[a].abs(), expl.contributions[b].abs());
        y.partial_cmp(&x).unwrap().then(a.cmp(&b))
    });

    let mut points = vec![expl.baseline.as_f64()];
    let mut acc = expl.baseline.as_f64();
    for &j in &order {
        acc += expl.contributions[j].as_f64();
        points.push(acc);
    }
    points.push(expl.reconstruction.as_f64());
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let scale = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / span;
    let origin = MARGIN_LEFT - lo * scale;
    let x = |v: f64| origin + v * scale;
    let height = TOP + ROW * (d as f64 + 2.0) + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" data-origin="{origin}" data-scale="{scale}">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));

    let base = expl.baseline.as_f64();
    let y0 = TOP;
    let _ = writeln!(
        s,
        r#"<line class="baseline" data-value="{base}" x1="{bx}" x2="{bx}" y1="{y0}" y2="{y1}" stroke="gray" stroke-dasharray="4"/>"#,
        bx = x(base),
        y1 = TOP + ROW * (d as f64 + 1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="{ty}" font-family="sans-serif" font-size="12">baseline = {base:.4}</text>"#,
        ty = y0 + 4.0
    );

    let mut start = base;
    for (row, &j) in order.iter().enumerate() {
        let phi = expl.contributions[j].as_f64();
        let end = start + phi;
        let y = TOP + ROW * (row as f64 + 1.0);
        let helpful = (phi >= 0.0) != lower_is_better;
        let colour = if helpful { "#d62728" } else { "#1f77b4" };
        let name = feature_names.get(j).map_or_else(|| format!("x{}", j + 1), |n| escape(n));
        let _ = writeln!(
            s,
            r#"<text x="10" y="{ty}" font-family="sans-serif" font-size="12">{name}</text>"#,
            ty = y + 4.0
        );
        let _ = writeln!(
            s,
            r#"<line class="contribution" data-feature="{name}" data-phi="{phi}" x1="{x1}" x2="{x2}" y1="{y}" y2="{y}" stroke="{colour}" stroke-width="8"/>"#,
            x1 = x(start),
            x2 = x(end)
        );
        let head = if phi >= 0.0 { 1.0 } else { -1.0 };
        let _ = writeln!(
            s,
            r#"<polygon points="{a},{t} {b},{y} {a},{bt}" fill="{colour}"/>"#,
            a = x(end),
            b = x(end) + 6.0 * head,
            t = y - 6.0,
            bt = y + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx}" y="{ty}" font-family="sans-serif" font-size="10">{phi:+.4}</text>"#,
            tx = x(start.max(end)) + 10.0,
            ty = y - 6.0
        );
        start = end;
    }

    let recon = expl.reconstruction.as_f64();
    let yf = TOP + ROW * (d as f64 + 1.0);
    let _ = writeln!(
        s,
        r#"<line class="final" data-value="{recon}" x1="{fx}" x2="{fx}" y1="{y0}" y2="{yf}" stroke="black" stroke-width="2"/>"#,
        fx = x(recon)
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="{ty}" font-family="sans-serif" font-size="12">value = {recon:.4}</text>"#,
        ty = yf + 16.0
    );
    s.push_str("</svg>\n");
    s
}

/// `feature,contribution` rows for a pairwise bar chart, in feature order.
pub fn pairwise_bars_csv<T: Scalar>(expl: &ExplanationVector<T>, feature_names: &[String]) -> String {
    let mut out = String::from("feature,contribution\n");
    for (j, c) in expl.contributions.iter().enumerate() {
        let name = feature_names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
        let _ = writeln!(out, "{name},{c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QoiKind, Subject};

    fn attr(tag: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let at = tag.find(&key).unwrap() + key.len();
        tag[at..].split('"').next().unwrap().parse().unwrap()
    }

    #[test]
    fn arrows_are_proportional() {
        let e = ExplanationVector::new(vec![-3.0, 1.0, 0.5], QoiKind::Rank, Subject::Item(0), 10.0, String::new());
        let names: Vec<String> = ["a", "b", "c"].map(String::from).into();
        let svg = waterfall_svg(&e, &names, "t", false);
        assert!(svg.contains(r##"data-phi="-3" x1"##));
        assert_eq!(waterfall_svg(&e, &names, "t", true).matches("#d62728").count(), 2);
        let root = svg.lines().next().unwrap();
        let (origin, scale) = (attr(root, "data-origin"), attr(root, "data-scale"));
        let arrows: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"contribution\"")).collect();
        assert_eq!(arrows.len(), 3);
        assert!(arrows[0].contains("data-feature=\"a\""));
        for a in &arrows {
            let len = (attr(a, "x2") - attr(a, "x1")).abs();
            assert!((len - scale * attr(a, "data-phi").abs()).abs() < 1e-9);
        }
        let fin = svg.lines().find(|l| l.contains("class=\"final\"")).unwrap();
        assert!(((attr(fin, "x1") - origin) / scale - 8.5).abs() < 1e-9);
    }

    #[test]
    fn bars() {
        let e = ExplanationVector::new(vec![1.0, -2.0], QoiKind::PairwiseRank, Subject::Pair { item: 0, partner: 1 }, 3.0, String::new());
        assert_eq!(pairwise_bars_csv(&e, &[]), "feature,contribution\nx1,1\nx2,-2\n");
    }
}
