//! Deterministic artifact emission: CSV tables, run JSON, and the final
//! curve SVG. Every document embeds the sha-256 of the config file that
//! produced it, numbers are written with 17 significant digits, and key
//! order is stable, so re-running a command byte-reproduces its files.

use crate::flow::Trajectory;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Hex sha-256 of the raw config file bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        use std::fmt::Write;
        write!(s, "{b:02x}").expect("writing to a String cannot fail");
    }
    s
}

/// 17 significant digits; round-trips any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV document: a hash comment line, a header row, then data rows.
/// Callers format the cells; rows must match the header width.
pub fn csv_document(hash: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str("# config_sha256=");
    out.push_str(hash);
    out.push('\n');
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width matches header");
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Run-level summary of a trajectory: the sampled time/mean-curvature/area
/// series plus the terminal status.
pub fn run_json(hash: &str, system: Value, trajectory: &Trajectory) -> Value {
    let times: Vec<f64> = trajectory.states.iter().map(|s| s.time).collect();
    let h_bar: Vec<f64> = trajectory.states.iter().map(|s| s.h_bar).collect();
    let area: Vec<f64> = trajectory.states.iter().map(|s| s.area).collect();
    let last = trajectory.last();
    json!({
        "config_sha256": hash,
        "system": system,
        "status": trajectory.status,
        "steps": trajectory.steps,
        "times": times,
        "h_bar": h_bar,
        "area": area,
        "final": {
            "time": last.time,
            "h_bar": last.h_bar,
            "area": last.area,
            "max_deviation": last.max_deviation(),
            "max_speed": last.max_speed(),
        },
    })
}

/// The closed orbit curve with the two bounding circles and the axes, in
/// model coordinates (y flipped once for screen orientation). Full-precision
/// coordinates so the drawing is parseable as data.
pub fn svg_document(hash: &str, points: &[[f64; 2]], r_inner: f64, r_outer: f64) -> String {
    let reach = points
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .fold(r_outer.max(r_inner), f64::max);
    let v = 1.08 * reach;
    let hair = v / 240.0;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"{} {} {} {}\">\n",
        fmt_f64(-v),
        fmt_f64(-v),
        fmt_f64(2.0 * v),
        fmt_f64(2.0 * v)
    ));
    s.push_str(&format!("<!-- config_sha256={hash} -->\n"));
    s.push_str("<g transform=\"scale(1,-1)\">\n");
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"0\" x2=\"{}\" y2=\"0\" stroke=\"#c8c8c8\" stroke-width=\"{}\"/>\n",
        fmt_f64(-v),
        fmt_f64(v),
        fmt_f64(hair)
    ));
    s.push_str(&format!(
        "<line x1=\"0\" y1=\"{}\" x2=\"0\" y2=\"{}\" stroke=\"#c8c8c8\" stroke-width=\"{}\"/>\n",
        fmt_f64(-v),
        fmt_f64(v),
        fmt_f64(hair)
    ));
    for r in [r_inner, r_outer] {
        s.push_str(&format!(
            "<circle cx=\"0\" cy=\"0\" r=\"{}\" fill=\"none\" stroke=\"#909090\" \
             stroke-width=\"{}\" stroke-dasharray=\"{} {}\"/>\n",
            fmt_f64(r),
            fmt_f64(hair),
            fmt_f64(4.0 * hair),
            fmt_f64(4.0 * hair)
        ));
    }
    let mut coords = String::new();
    for p in points.iter().chain(points.first().into_iter()) {
        if !coords.is_empty() {
            coords.push(' ');
        }
        coords.push_str(&fmt_f64(p[0]));
        coords.push(',');
        coords.push_str(&fmt_f64(p[1]));
    }
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"{}\" points=\"{coords}\"/>\n",
        fmt_f64(2.0 * hair)
    ));
    s.push_str("</g>\n</svg>\n");
    s
}

/// Extract the polyline vertices back out of [`svg_document`] output. The
/// trailing closing vertex (a repeat of the first) is dropped.
pub fn svg_polyline_points(svg: &str) -> Option<Vec<[f64; 2]>> {
    let start = svg.find("points=\"")? + "points=\"".len();
    let end = svg[start..].find('"')? + start;
    let mut pts = Vec::new();
    for pair in svg[start..end].split_whitespace() {
        let (x, y) = pair.split_once(',')?;
        pts.push([x.parse().ok()?, y.parse().ok()?]);
    }
    if pts.len() >= 2 && pts.first() == pts.last() {
        pts.pop();
    }
    Some(pts)
}

/// Extract the two dashed circle radii (inner first).
pub fn svg_circle_radii(svg: &str) -> Option<(f64, f64)> {
    let mut radii = Vec::new();
    let mut rest = svg;
    while let Some(at) = rest.find(" r=\"") {
        let tail = &rest[at + 4..];
        let end = tail.find('"')?;
        radii.push(tail[..end].parse::<f64>().ok()?);
        rest = &tail[end..];
    }
    if radii.len() == 2 {
        Some((radii[0].min(radii[1]), radii[0].max(radii[1])))
    } else {
        None
    }
}
