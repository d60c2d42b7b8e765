//! Static SVG figure of a finished run: lanes, then every agent's executed
//! track colored from light (start) to dark (end), collisions marked.

use std::fmt::Write as _;

use crate::scene::{LaneMap, Point, Role};
use crate::sim::{Event, SimLog};

const MARGIN: f64 = 15.0;
const SCALE: f64 = 6.0;

fn hue(role: Role, k: usize) -> f64 {
    match role {
        Role::Ego => 210.0,
        Role::Adversary => 0.0,
        Role::Reactive => [120.0, 45.0, 280.0, 170.0, 320.0][k % 5],
    }
}

/// Renders `log` over `map`. The view is fitted to the executed tracks.
pub fn render(log: &SimLog, map: &LaneMap) -> String {
    let tracks: Vec<Vec<Point>> = (0..log.agents.len())
        .map(|i| log.track(i).iter().map(|s| s.position()).collect())
        .collect();
    let all = tracks.iter().flatten();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let (x0, y0, x1, y1) = (x0 - MARGIN, y0 - MARGIN, x1 + MARGIN, y1 + MARGIN);
    let (w, h) = ((x1 - x0) * SCALE, (y1 - y0) * SCALE);
    // World y points up, SVG y points down.
    let tx = |p: Point| ((p.x - x0) * SCALE, (y1 - p.y) * SCALE);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fafafa"/>"##);
    let _ = writeln!(out, "<title>{}  seed {}</title>", xml_escape(&log.scenario), log.seed);
    for lane in map.lanes() {
        let pts: Vec<String> = lane
            .centerline
            .points()
            .iter()
            .map(|&p| {
                let (x, y) = tx(p);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#d4d4d4" stroke-width="{:.1}" stroke-linejoin="round"/>"##,
            pts.join(" "),
            lane.width * SCALE
        );
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#ffffff" stroke-width="1" stroke-dasharray="6 6"/>"##,
            pts.join(" ")
        );
    }
    let mut reactive = 0;
    for (i, a) in log.agents.iter().enumerate() {
        let hue = hue(a.role, reactive);
        if a.role == Role::Reactive {
            reactive += 1;
        }
        let n = tracks[i].len().max(2) - 1;
        for (t, seg) in tracks[i].windows(2).enumerate() {
            let light = 80.0 - 50.0 * t as f64 / n as f64;
            let (ax, ay) = tx(seg[0]);
            let (bx, by) = tx(seg[1]);
            let _ = writeln!(
                out,
                r#"<line x1="{ax:.1}" y1="{ay:.1}" x2="{bx:.1}" y2="{by:.1}" stroke="hsl({hue:.0},70%,{light:.0}%)" stroke-width="4" stroke-linecap="round"/>"#
            );
        }
        if let Some(&p) = tracks[i].last() {
            let (x, y) = tx(p);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{} {}</text>"#,
                x + 6.0,
                y - 6.0,
                a.id,
                format!("{:?}", a.role).to_lowercase()
            );
        }
    }
    for e in &log.events {
        if let Event::Collision(c) = e {
            if let Some(i) = log.agent_index(c.agents.0) {
                let (x, y) = tx(log.steps[c.step].states[i].position());
                let _ = writeln!(
                    out,
                    r##"<circle cx="{x:.1}" cy="{y:.1}" r="10" fill="none" stroke="#111" stroke-width="2"/>"##
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
