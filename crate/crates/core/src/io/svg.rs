//! Static SVG figures: time-space diagram, min/max velocity and flow-density curve.

use std::fmt::Write;

use crate::analysis::DiagramSeries;
use crate::error::{Error, Result};
use crate::numeric::SimTrace;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    padded(lo, hi)
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn point(&self, x: f64, y: f64) -> String {
        format!("{:.2},{:.2}", self.px(x), self.py(y))
    }

    fn open(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<style>text {{ font-family: sans-serif; font-size: 12px; }} .axis {{ stroke: black; stroke-width: 1; }} .line {{ fill: none; stroke-width: 1.2; }}</style>
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#
        );
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let px = self.px(xv);
            let _ = writeln!(
                s,
                r#"<line class="axis" x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 20.0,
                tick(xv)
            );
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let py = self.py(yv);
            let _ = writeln!(
                s,
                r#"<line class="axis" x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
        s
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".to_string()
        } else {
            s.to_string()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(s: &mut String, class: &str, color: &str, points: &[String]) {
    if points.len() == 1 {
        let (x, y) = points[0]
            .split_once(',')
            .expect("point has two coordinates");
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{x}" cy="{y}" r="2" fill="{color}"/>"#
        );
    } else {
        let _ = writeln!(
            s,
            r#"<polyline class="{class} line" stroke="{color}" points="{}"/>"#,
            points.join(" ")
        );
    }
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Position against time for vehicles `0, k, 2k, ...`. On a ring each wrap
/// starts a new sub-path.
pub fn render_timespace_svg(trace: &SimTrace, every_kth: usize) -> Result<String> {
    let samples = &trace.samples;
    if every_kth == 0 {
        return Err(Error::invalid("every_kth must be >= 1"));
    }
    if samples.is_empty() || samples.n_vehicles() == 0 {
        return Err(Error::invalid("time-space diagram needs a non-empty trace"));
    }
    let ids: Vec<usize> = (0..samples.n_vehicles()).step_by(every_kth).collect();
    let frame = Frame {
        x: bounds(samples.times.iter().copied()),
        y: match trace.topology {
            crate::model::Topology::Ring { length } => (0.0, length),
            crate::model::Topology::OpenLink => bounds(
                (0..samples.len())
                    .flat_map(|k| ids.iter().map(move |&id| samples.positions(k)[id])),
            ),
        },
    };
    let mut s = frame.open("Time-space diagram", "time (s)", "position (m)");
    let jump = match trace.topology {
        crate::model::Topology::Ring { length } => 0.5 * length,
        crate::model::Topology::OpenLink => f64::INFINITY,
    };
    for (k, &id) in ids.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if samples.len() == 1 {
            let p = frame.point(samples.times[0], samples.positions(0)[id]);
            polyline(&mut s, "trajectory", color, &[p]);
            continue;
        }
        let mut d = String::new();
        let mut prev: Option<f64> = None;
        for j in 0..samples.len() {
            let x = samples.positions(j)[id];
            let cmd = match prev {
                Some(p) if (x - p).abs() <= jump => 'L',
                _ => 'M',
            };
            if !d.is_empty() {
                d.push(' ');
            }
            let _ = write!(d, "{cmd}{}", frame.point(samples.times[j], x));
            prev = Some(x);
        }
        let _ = writeln!(
            s,
            r#"<path class="trajectory line" data-vehicle="{id}" stroke="{color}" d="{d}"/>"#
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Smallest and largest momentary velocity across the fleet against time.
pub fn render_minmax_svg(trace: &SimTrace) -> Result<String> {
    let samples = &trace.samples;
    if samples.is_empty() || samples.n_vehicles() == 0 {
        return Err(Error::invalid(
            "min/max velocity plot needs a non-empty trace",
        ));
    }
    let extremes: Vec<(f64, f64)> = (0..samples.len())
        .map(|k| {
            samples
                .velocities(k)
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                })
        })
        .collect();
    let frame = Frame {
        x: bounds(samples.times.iter().copied()),
        y: bounds(extremes.iter().flat_map(|&(a, b)| [a, b])),
    };
    let mut s = frame.open("Minimum and maximum velocity", "time (s)", "velocity (m/s)");
    let lo: Vec<String> = extremes
        .iter()
        .zip(&samples.times)
        .map(|(e, &t)| frame.point(t, e.0))
        .collect();
    let hi: Vec<String> = extremes
        .iter()
        .zip(&samples.times)
        .map(|(e, &t)| frame.point(t, e.1))
        .collect();
    polyline(&mut s, "min-velocity", PALETTE[0], &lo);
    polyline(&mut s, "max-velocity", PALETTE[1], &hi);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Flow against density.
pub fn render_diagram_svg(series: &DiagramSeries) -> Result<String> {
    if series.points.is_empty() {
        return Err(Error::invalid(
            "fundamental diagram needs at least one point",
        ));
    }
    let frame = Frame {
        x: bounds(series.points.iter().map(|p| p.rho)),
        y: bounds(series.points.iter().map(|p| p.q).chain([0.0])),
    };
    let mut s = frame.open("Flow versus density", "density (veh/m)", "flow (veh/s)");
    let points: Vec<String> = series
        .points
        .iter()
        .map(|p| frame.point(p.rho, p.q))
        .collect();
    polyline(&mut s, "flow", PALETTE[0], &points);
    s.push_str("</svg>\n");
    Ok(s)
}
