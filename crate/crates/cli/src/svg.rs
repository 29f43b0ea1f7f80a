//! Stacked line plots of input and output channels as a standalone SVG document.

use std::fmt::Write as _;

use falsify_core::{Formula, Signal};

const WIDTH: f64 = 800.0;
const PANEL: f64 = 130.0;
const GAP: f64 = 34.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 48.0;

/// Horizontal lines `x[channel] = value` for every atom over a single output channel.
pub fn thresholds(phi: &Formula) -> Vec<(usize, f64)> {
    fn walk(phi: &Formula, out: &mut Vec<(usize, f64)>) {
        match phi {
            Formula::Atom(f) => {
                if let [(ch, c)] = f.terms[..] {
                    if c != 0.0 {
                        let t = (-f.constant / c, ch);
                        if !out.iter().any(|&(och, v)| och == t.1 && v == t.0) {
                            out.push((t.1, t.0));
                        }
                    }
                }
            }
            Formula::Not(a) => walk(a, out),
            Formula::And(a, b) | Formula::Until(_, a, b) => {
                walk(a, out);
                walk(b, out);
            }
            Formula::Const(_) | Formula::Bottom => {}
        }
    }
    let mut out = Vec::new();
    walk(phi, &mut out);
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Panel<'a> {
    name: &'a str,
    values: Vec<f64>,
    dt: f64,
    color: &'static str,
    lines: Vec<f64>,
}

fn draw_panel(out: &mut String, p: &Panel, top: f64, horizon: f64) {
    let finite = p.values.iter().chain(&p.lines).copied().filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let w = WIDTH - LEFT - RIGHT;
    let x = |t: f64| LEFT + w * t / horizon;
    let y = |v: f64| top + PANEL * (hi - v) / (hi - lo);

    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{top}" width="{w}" height="{PANEL}" fill="none" stroke="#999"/>"##);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="13" text-anchor="end">{}</text>"#, LEFT - 8.0, top + PANEL / 2.0, escape(p.name));
    for (v, anchor) in [(hi, top + 10.0), (lo, top + PANEL)] {
        let _ = writeln!(out, r#"<text x="{}" y="{anchor}" font-size="10" text-anchor="end">{v:.1}</text>"#, LEFT - 8.0);
    }
    for &t in &p.lines {
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" x2="{:.2}" y1="{yv:.2}" y2="{yv:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            LEFT + w,
            yv = y(t)
        );
        let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#d62728" text-anchor="end">{t}</text>"##, LEFT + w - 4.0, y(t) - 3.0);
    }
    let points: Vec<String> =
        p.values.iter().enumerate().map(|(k, &v)| format!("{:.2},{:.2}", x(k as f64 * p.dt), y(v.clamp(lo, hi)))).collect();
    let _ = writeln!(out, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, p.color, points.join(" "));
}

/// Plots every channel of `input` and `output` in its own panel, with the thresholds of `phi`
/// drawn over the output channels.
pub fn render(title: &str, input: &Signal, input_names: &[String], output: &Signal, output_names: &[String], phi: &Formula) -> String {
    let lines = thresholds(phi);
    let mut panels = Vec::new();
    for ch in 0..input.dim() {
        let name = input_names.get(ch).map_or("u", String::as_str);
        panels.push(Panel { name, values: input.channel(ch).collect(), dt: input.dt(), color: "#1f77b4", lines: Vec::new() });
    }
    for ch in 0..output.dim() {
        let name = output_names.get(ch).map_or("y", String::as_str);
        let own = lines.iter().filter(|(c, _)| *c == ch).map(|&(_, v)| v).collect();
        panels.push(Panel { name, values: output.channel(ch).collect(), dt: output.dt(), color: "#2ca02c", lines: own });
    }
    let horizon = input.horizon().max(output.horizon()).max(f64::MIN_POSITIVE);
    let height = TOP + panels.len() as f64 * (PANEL + GAP) + 10.0;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{LEFT}" y="22" font-size="15">{}</text>"#, escape(title));
    for (i, p) in panels.iter().enumerate() {
        let top = TOP + i as f64 * (PANEL + GAP);
        draw_panel(&mut out, p, top, horizon);
        if i + 1 == panels.len() {
            for frac in [0.0, 0.5, 1.0] {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                    LEFT + (WIDTH - LEFT - RIGHT) * frac,
                    top + PANEL + 14.0,
                    horizon * frac
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use falsify_core::stl::parse;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn thresholds_of_single_channel_atoms() {
        let phi = parse("F[10,30] (v <= 50 | v >= 60) & G[0,1] (w - v > 0) & G[0,1] (2 * w < 8)", &names(&["v", "w"])).unwrap();
        let mut t = thresholds(&phi);
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(t, vec![(0, 50.0), (0, 60.0), (1, 4.0)]);
    }

    #[test]
    fn document_has_one_polyline_per_channel() {
        let u = Signal::scalar(0.5, &[0.0, 1.0, 2.0]).unwrap();
        let y = Signal::new(0.5, vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]]).unwrap();
        let phi = parse("G[0,1] (a < 2.5)", &names(&["a", "b"])).unwrap();
        let svg = render("a < b & c", &u, &names(&["u"]), &y, &names(&["a", "b"]), &phi);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
