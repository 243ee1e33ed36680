//! Self-contained SVG 1.1 figures rendered from a run directory.
//!
//! Rendering reads only artifact files. No clock, locale or randomness is
//! involved, so the same run directory always yields the same bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};
use crate::export::{
    allocation_file, read_matrix, read_network, read_timeseries, trust_snapshot_file,
    NetworkDocument, RunManifest, EMOTION_HEATMAP_FILE, FRIENDSHIP_FILE, INFLUENCE_FILE,
    TIMESERIES_FILE,
};
use crate::metrics::MetricsLog;
use crate::model::Channel;

pub const PLOT_DIR: &str = "plots";

/// Emotion heatmap keeps every `HEATMAP_STRIDE`-th iteration.
pub const HEATMAP_STRIDE: usize = 10;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

const OPINION_COLOR: &str = "#1f77b4";
const TRUST_COLOR: &str = "#d62728";
const EMOTION_COLORS: [&str; 8] = [
    "#f2c300", "#2ca02c", "#17becf", "#1f77b4", "#5b3f9e", "#8c564b", "#d62728", "#ff7f0e",
];
const NODE_COLORS: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut svg = Self {
            body: String::new(),
            width,
            height,
        };
        svg.text(width / 2.0, 28.0, title, "middle", 18.0);
        svg
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, extra: &str) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{extra}/>"#
        )
        .unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        )
        .unwrap();
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height,
        )
    }
}

/// Linear data-to-pixel mapping for one axis.
#[derive(Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span < 1e-9 {
        return (lo - 0.05, hi + 0.05);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    points: Vec<(f64, f64)>,
    right_axis: bool,
}

struct Marker {
    x: f64,
    label: String,
}

fn draw_y_axis(svg: &mut Svg, scale: Scale, x: f64, label: &str, right: bool) {
    svg.line(x, TOP, x, HEIGHT - BOTTOM, "#000000", "");
    let (tick_dir, anchor) = if right { (1.0, "start") } else { (-1.0, "end") };
    for k in 0..=5 {
        let v = scale.lo + (scale.hi - scale.lo) * k as f64 / 5.0;
        let y = scale.map(v);
        svg.line(x, y, x + 5.0 * tick_dir, y, "#000000", "");
        svg.text(
            x + 8.0 * tick_dir,
            y + 4.0,
            &format!("{v:.3}"),
            anchor,
            11.0,
        );
    }
    let lx = if right { WIDTH - 15.0 } else { 15.0 };
    let cy = (TOP + HEIGHT - BOTTOM) / 2.0;
    writeln!(
        svg.body,
        r#"<text x="{lx:.2}" y="{cy:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 {lx:.2} {cy:.2})">{}</text>"#,
        escape(label)
    )
    .unwrap();
}

fn line_chart(
    title: &str,
    y_label: &str,
    y_right_label: Option<&str>,
    series: &[Series<'_>],
    markers: &[Marker],
) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT, title);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_lo, x_hi) = {
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo, lo + 1.0)
        } else {
            (0.0, 1.0)
        }
    };
    let x_scale = Scale {
        lo: x_lo,
        hi: x_hi,
        px_lo: LEFT,
        px_hi: WIDTH - RIGHT,
    };
    let y_scale_for = |right: bool| {
        let (lo, hi) = padded_range(
            series
                .iter()
                .filter(|s| s.right_axis == right)
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        Scale {
            lo,
            hi,
            px_lo: HEIGHT - BOTTOM,
            px_hi: TOP,
        }
    };
    let left = y_scale_for(false);
    let right = y_scale_for(true);

    svg.line(
        LEFT,
        HEIGHT - BOTTOM,
        WIDTH - RIGHT,
        HEIGHT - BOTTOM,
        "#000000",
        "",
    );
    for k in 0..=5 {
        let v = x_lo + (x_hi - x_lo) * k as f64 / 5.0;
        let x = x_scale.map(v);
        svg.line(x, HEIGHT - BOTTOM, x, HEIGHT - BOTTOM + 5.0, "#000000", "");
        svg.text(
            x,
            HEIGHT - BOTTOM + 18.0,
            &format!("{v:.0}"),
            "middle",
            11.0,
        );
    }
    svg.text(
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 15.0,
        "Iteration",
        "middle",
        13.0,
    );
    draw_y_axis(&mut svg, left, LEFT, y_label, false);
    if let Some(label) = y_right_label {
        draw_y_axis(&mut svg, right, WIDTH - RIGHT, label, true);
    }

    for m in markers {
        let x = x_scale.map(m.x);
        svg.line(
            x,
            TOP,
            x,
            HEIGHT - BOTTOM,
            "#555555",
            r#" stroke-dasharray="6,4""#,
        );
        svg.text(x + 4.0, TOP + 14.0, &m.label, "start", 12.0);
    }

    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let scale = if s.right_axis { right } else { left };
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_scale.map(x), scale.map(y)))
            .collect();
        writeln!(
            svg.body,
            r#"<polyline class="series" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            s.color,
            pts.join(" ")
        )
        .unwrap();
    }

    // Legend
    for (k, s) in series.iter().enumerate() {
        let y = TOP + 4.0 + 16.0 * k as f64;
        let x = WIDTH - RIGHT - 150.0;
        svg.line(x, y, x + 20.0, y, s.color, r#" stroke-width="3""#);
        svg.text(x + 26.0, y + 4.0, s.name, "start", 12.0);
    }
    svg.finish()
}

/// White-to-`color` ramp; `t` in [0, 1].
fn ramp(t: f64, color: (u8, u8, u8)) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |c: u8| (255.0 + (c as f64 - 255.0) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(color.0),
        mix(color.1),
        mix(color.2)
    )
}

fn heatmap(
    title: &str,
    grid: &[Vec<f64>],
    row_labels: &[String],
    col_label: &dyn Fn(usize) -> String,
    axis_titles: (&str, &str),
    color: (u8, u8, u8),
) -> String {
    let mut svg = Svg::new(WIDTH, HEIGHT, title);
    let rows = grid.len();
    let cols = grid.first().map_or(0, Vec::len);
    let left = LEFT + 50.0;
    let (lo, hi) = grid
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plot_w = WIDTH - left - RIGHT - 40.0;
    let plot_h = HEIGHT - TOP - BOTTOM;
    if rows > 0 && cols > 0 {
        let cw = plot_w / cols as f64;
        let ch = plot_h / rows as f64;
        for (r, row) in grid.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let t = if hi > lo { (v - lo) / span } else { 0.5 };
                svg.rect(
                    left + cw * c as f64,
                    TOP + ch * r as f64,
                    cw + 0.05,
                    ch + 0.05,
                    &ramp(t, color),
                );
            }
        }
        for (r, label) in row_labels.iter().enumerate() {
            svg.text(
                left - 6.0,
                TOP + ch * (r as f64 + 0.5) + 4.0,
                label,
                "end",
                11.0,
            );
        }
        let every = (cols / 10).max(1);
        for c in (0..cols).step_by(every) {
            svg.text(
                left + cw * (c as f64 + 0.5),
                HEIGHT - BOTTOM + 16.0,
                &col_label(c),
                "middle",
                11.0,
            );
        }
    }
    svg.text(
        left + plot_w / 2.0,
        HEIGHT - 15.0,
        axis_titles.0,
        "middle",
        13.0,
    );
    svg.text(14.0, TOP - 10.0, axis_titles.1, "start", 13.0);
    // Colour bar
    let bx = WIDTH - RIGHT - 10.0;
    for k in 0..20 {
        let t = 1.0 - k as f64 / 19.0;
        svg.rect(
            bx,
            TOP + plot_h * k as f64 / 20.0,
            16.0,
            plot_h / 20.0 + 0.05,
            &ramp(t, color),
        );
    }
    let (lo_l, hi_l) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    svg.text(bx + 20.0, TOP + 10.0, &format!("{hi_l:.3}"), "start", 11.0);
    svg.text(
        bx + 20.0,
        TOP + plot_h,
        &format!("{lo_l:.3}"),
        "start",
        11.0,
    );
    svg.finish()
}

fn network_drawing(title: &str, doc: &NetworkDocument, sized_by_reputation: bool) -> String {
    let side = 640.0;
    let mut svg = Svg::new(side, side, title);
    let n = doc.nodes.len();
    let (cx, cy, radius) = (side / 2.0, side / 2.0 + 15.0, side / 2.0 - 80.0);
    let pos = |i: usize| {
        let a = 2.0 * PI * i as f64 / n.max(1) as f64 - PI / 2.0;
        (cx + radius * a.cos(), cy + radius * a.sin())
    };
    for l in &doc.links {
        let (x1, y1) = pos(l.source);
        let (x2, y2) = pos(l.target);
        let width = if sized_by_reputation {
            0.3 + 4.0 * l.weight
        } else {
            1.0
        };
        let extra = format!(r#" stroke-width="{width:.2}" stroke-opacity="0.6""#);
        svg.line(x1, y1, x2, y2, "#888888", &extra);
    }
    for node in &doc.nodes {
        let (x, y) = pos(node.id);
        let r = if sized_by_reputation {
            4.0 + 20.0 * node.reputation
        } else {
            10.0
        };
        let fill = if sized_by_reputation {
            "#1f77b4"
        } else {
            NODE_COLORS[node.id % NODE_COLORS.len()]
        };
        writeln!(
            svg.body,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" stroke="#333333"/>"##
        )
        .unwrap();
        svg.text(x, y + 4.0, &node.id.to_string(), "middle", 10.0);
    }
    svg.finish()
}

fn series_from(
    log: &MetricsLog,
    pick: impl Fn(&crate::metrics::MetricsRow) -> f64,
) -> Vec<(f64, f64)> {
    log.rows
        .iter()
        .map(|r| (r.iteration as f64, pick(r)))
        .collect()
}

pub fn opinion_chart(log: &MetricsLog) -> String {
    let s = Series {
        name: "Average opinion",
        color: OPINION_COLOR,
        points: series_from(log, |r| r.avg_opinion),
        right_axis: false,
    };
    line_chart(
        "Average Opinions Over Time",
        "Average opinion",
        None,
        &[s],
        &[],
    )
}

pub fn trust_chart(log: &MetricsLog) -> String {
    let s = Series {
        name: "Average trust",
        color: TRUST_COLOR,
        points: series_from(log, |r| r.avg_trust),
        right_axis: false,
    };
    line_chart("Average Trust Over Time", "Average trust", None, &[s], &[])
}

pub fn emotion_chart(log: &MetricsLog) -> String {
    let series: Vec<Series<'_>> = Channel::ALL
        .iter()
        .map(|&c| Series {
            name: c.name(),
            color: EMOTION_COLORS[c.index()],
            points: series_from(log, |r| r.emotions.get(c)),
            right_axis: false,
        })
        .collect();
    line_chart(
        "Average Emotions Over Time",
        "Mean intensity",
        None,
        &series,
        &[],
    )
}

pub fn opinion_trust_events_chart(log: &MetricsLog, events: &[(u64, String)]) -> String {
    let series = [
        Series {
            name: "Average opinion",
            color: OPINION_COLOR,
            points: series_from(log, |r| r.avg_opinion),
            right_axis: false,
        },
        Series {
            name: "Average trust",
            color: TRUST_COLOR,
            points: series_from(log, |r| r.avg_trust),
            right_axis: true,
        },
    ];
    let markers: Vec<Marker> = events
        .iter()
        .map(|(it, label)| Marker {
            x: *it as f64,
            label: label.clone(),
        })
        .collect();
    line_chart(
        "Average Opinions and Trust with External Events",
        "Average opinion",
        Some("Average trust"),
        &series,
        &markers,
    )
}

pub fn emotion_heatmap(table: &[Vec<f64>]) -> String {
    let sampled: Vec<Vec<f64>> = table
        .iter()
        .map(|row| row.iter().copied().step_by(HEATMAP_STRIDE).collect())
        .collect();
    let labels: Vec<String> = Channel::ALL.iter().map(|c| c.name().to_string()).collect();
    heatmap(
        "Emotion Intensity Over Time",
        &sampled,
        &labels,
        &|c| (c * HEATMAP_STRIDE).to_string(),
        ("Iteration", "Emotion"),
        (0x7b, 0x1f, 0xa2),
    )
}

pub fn allocation_heatmap(grid: &[Vec<f64>], iteration: u64) -> String {
    let labels: Vec<String> = (0..grid.len()).map(|a| format!("area {a}")).collect();
    heatmap(
        &format!("Resource Allocation at Iteration {iteration}"),
        grid,
        &labels,
        &|c| c.to_string(),
        ("Agent", "Area"),
        (0x2c, 0xa0, 0x2c),
    )
}

pub fn trust_heatmap(grid: &[Vec<f64>], iteration: u64) -> String {
    let labels: Vec<String> = (0..grid.len()).map(|i| i.to_string()).collect();
    heatmap(
        &format!("Trust Between Agents at Iteration {iteration}"),
        grid,
        &labels,
        &|c| c.to_string(),
        ("Trustee", "Trustor"),
        (0xd6, 0x27, 0x28),
    )
}

/// Renders every figure for the run in `run_dir` into `run_dir/plots/`.
/// Returns written paths in a fixed order.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = RunManifest::load(run_dir)?;
    let log = read_timeseries(&run_dir.join(TIMESERIES_FILE))?;
    let emotions = read_matrix(&run_dir.join(EMOTION_HEATMAP_FILE))?;
    let friendship = read_network(&run_dir.join(FRIENDSHIP_FILE))?;
    let influence = read_network(&run_dir.join(INFLUENCE_FILE))?;

    let events: Vec<(u64, String)> = manifest
        .config
        .events
        .iter()
        .map(|e| {
            let label = e
                .label
                .clone()
                .unwrap_or_else(|| format!("Event @ {}", e.iteration));
            (e.iteration, label)
        })
        .collect();

    let mut figures: Vec<(String, String)> = vec![
        ("fig1_opinions.svg".into(), opinion_chart(&log)),
        ("fig2_trust.svg".into(), trust_chart(&log)),
        ("fig3_emotions.svg".into(), emotion_chart(&log)),
        (
            "fig4_opinion_trust_events.svg".into(),
            opinion_trust_events_chart(&log, &events),
        ),
        (
            "fig5a_friendship_network.svg".into(),
            network_drawing("Friendship Network", &friendship, false),
        ),
        (
            "fig5b_influence_network.svg".into(),
            network_drawing("Influence Network", &influence, true),
        ),
        (
            "fig6_emotion_heatmap.svg".into(),
            emotion_heatmap(&emotions),
        ),
    ];
    if let Some(it) = manifest.allocation_snapshot_iteration() {
        let grid = read_matrix(&run_dir.join(allocation_file(it)))?;
        figures.push((
            "fig7_allocation_map.svg".into(),
            allocation_heatmap(&grid, it),
        ));
    }
    if let Some(it) = manifest.trust_snapshot_iteration() {
        let grid = read_matrix(&run_dir.join(trust_snapshot_file(it)))?;
        figures.push(("fig8_trust_heatmap.svg".into(), trust_heatmap(&grid, it)));
    }

    let out = run_dir.join(PLOT_DIR);
    fs::create_dir_all(&out).map_err(|e| SimError::io(&out, e))?;
    figures
        .into_iter()
        .map(|(name, body)| {
            let path = out.join(name);
            fs::write(&path, body).map_err(|e| SimError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
