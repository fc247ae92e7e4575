//! Static plot of the cell-reduced paths.

use std::fmt::Write;

use toruszeros::{Complex64, PathBundle};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub fn render(bundle: &PathBundle, title: &str) -> String {
    let side = bundle.cell.side();
    let corner = bundle.cell.corner();
    let scale = SIZE / side;
    let map = |z: Complex64| -> (f64, f64) {
        (MARGIN + (z.re - corner.re) * scale, MARGIN + SIZE - (z.im - corner.im) * scale)
    };
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, full / 2.0, MARGIN / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect class="cell" x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black" stroke-dasharray="2,4"/>"#
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let x = MARGIN + f * SIZE;
        let y = MARGIN + SIZE - f * SIZE;
        let vx = corner.re + f * side;
        let vy = corner.im + f * side;
        let (bottom, left) = (MARGIN + SIZE, MARGIN);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{bottom}" x2="{x}" y2="{}" stroke="black"/>"#, bottom + 6.0);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{vx:.2}</text>"#, bottom + 20.0);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{left}" y2="{y}" stroke="black"/>"#, left - 6.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{vy:.2}</text>"#, left - 9.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Re z</text>"#, full / 2.0, full - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">Im z</text>"#,
        full / 2.0
    );
    for (n, path) in bundle.reduced.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        // Break the polyline wherever the reduced path wraps across an edge.
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (k, z) in path.iter().enumerate() {
            if k > 0 && (z - path[k - 1]).norm() > 0.5 * side {
                segments.push(Vec::new());
            }
            segments.last_mut().expect("nonempty").push(map(*z));
        }
        let _ = writeln!(s, r#"<g class="path" data-index="{n}" stroke="{color}" fill="none" stroke-width="1.5">"#);
        for seg in segments.iter().filter(|seg| seg.len() > 1) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, r#"<polyline points="{}"/>"#, pts.join(" "));
        }
        let _ = writeln!(s, "</g>");
        if let (Some(first), Some(last)) = (path.first(), path.last()) {
            let (x, y) = map(*first);
            let _ = writeln!(s, r#"<circle class="start" cx="{x:.2}" cy="{y:.2}" r="5" fill="{color}"/>"#);
            let (x, y) = map(*last);
            let _ = writeln!(
                s,
                r#"<rect class="end" x="{:.2}" y="{:.2}" width="8" height="8" fill="none" stroke="{color}" stroke-width="2"/>"#,
                x - 4.0,
                y - 4.0
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" fill="{color}">ζ{n}</text>"#, x + 8.0, y - 8.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
