//! Top-down SVG view of one or more trajectories.

use std::fmt::Write as _;

use super::episode::Trajectory;
use crate::sim::ScenarioSpec;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.min_x) * self.scale
    }

    /// SVG y grows downward.
    fn y(&self, y: f64) -> f64 {
        SIZE - MARGIN - (y - self.min_y) * self.scale
    }
}

fn frame(scenario: &ScenarioSpec, trajectories: &[&Trajectory]) -> Frame {
    let mut xs = vec![scenario.start.x, scenario.target.x];
    let mut ys = vec![scenario.start.y, scenario.target.y];
    for o in &scenario.obstacles {
        xs.extend([o.center_xy.x - o.radius - scenario.d_thresh, o.center_xy.x + o.radius + scenario.d_thresh]);
        ys.extend([o.center_xy.y - o.radius - scenario.d_thresh, o.center_xy.y + o.radius + scenario.d_thresh]);
    }
    for t in trajectories {
        for r in &t.records {
            xs.push(r.state.position.x);
            ys.push(r.state.position.y);
        }
    }
    let min_x = xs.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let max_x = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let min_y = ys.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let max_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let span = (max_x - min_x).max(max_y - min_y);
    Frame { min_x, min_y, scale: (SIZE - 2.0 * MARGIN) / span }
}

/// Paths, obstacle footprints (at time zero), `d_thresh` clearance rings,
/// and start/target markers.
pub fn render_svg(scenario: &ScenarioSpec, trajectories: &[&Trajectory], title: &str) -> String {
    let f = frame(scenario, trajectories);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(title))
        .unwrap();

    for o in &scenario.obstacles {
        let (cx, cy) = (f.x(o.center_xy.x), f.y(o.center_xy.y));
        writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="red" stroke-dasharray="4 3"/>"#,
            (o.radius + scenario.d_thresh) * f.scale
        )
        .unwrap();
        writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="forestgreen"/>"#, o.radius * f.scale)
            .unwrap();
    }

    for t in trajectories {
        let mut points = vec![format!("{:.2},{:.2}", f.x(t.start.position.x), f.y(t.start.position.y))];
        points
            .extend(t.records.iter().map(|r| format!("{:.2},{:.2}", f.x(r.state.position.x), f.y(r.state.position.y))));
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-opacity="0.6" stroke-width="1.5"/>"#,
            points.join(" ")
        )
        .unwrap();
    }

    let (sx, sy) = (f.x(scenario.start.x), f.y(scenario.start.y));
    writeln!(out, r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="black"/>"#, sx - 4.0, sy - 4.0).unwrap();
    let (tx, ty) = (f.x(scenario.target.x), f.y(scenario.target.y));
    writeln!(
        out,
        r#"<circle cx="{tx:.2}" cy="{ty:.2}" r="{:.2}" fill="none" stroke="black"/>"#,
        scenario.success_radius * f.scale
    )
    .unwrap();
    writeln!(out, "</svg>").unwrap();
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
