//! Staircase plots: units in book order against their cluster.

use std::fmt::Write;

const LEFT: f64 = 48.0;
const RIGHT: f64 = 16.0;
const STEP: f64 = 8.0;
const LEVEL: f64 = 14.0;
const PANEL_TOP: f64 = 22.0;
const PANEL_BOTTOM: f64 = 30.0;
const RADIUS: f64 = 3.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// One row of points: the label of each unit, if it has one.
#[derive(Debug, Clone)]
pub struct Panel {
    pub name: String,
    pub labels: Vec<Option<String>>,
}

/// Distinct labels, integers in numeric order before other strings.
pub fn label_levels<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut levels: Vec<&str> = labels.into_iter().collect();
    levels.sort_by_key(|l| (l.parse::<i64>().map_or((1, 0), |v| (0, v)), *l));
    levels.dedup();
    levels.into_iter().map(str::to_string).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders stacked panels sharing an x axis.
///
/// `gatherings` holds the (ordinal, id) of every unit's gathering. Each
/// gathering gets a tick labelled with its id, so reused signature letters
/// appear again.
pub fn staircase_svg(gatherings: &[(usize, String)], panels: &[Panel]) -> String {
    let n = gatherings.len();
    let levels: Vec<Vec<String>> = panels
        .iter()
        .map(|p| label_levels(p.labels.iter().flatten().map(String::as_str)))
        .collect();
    let heights: Vec<f64> = levels
        .iter()
        .map(|l| PANEL_TOP + LEVEL * l.len().max(1) as f64 + PANEL_BOTTOM)
        .collect();
    let width = LEFT + STEP * n as f64 + RIGHT;
    let height: f64 = heights.iter().sum();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="9">"#
    );
    let mut top = 0.0;
    for ((panel, levels), h) in panels.iter().zip(&levels).zip(&heights) {
        let _ = writeln!(
            svg,
            r#"<g class="panel" data-name="{}" transform="translate(0,{top})">"#,
            escape(&panel.name)
        );
        let _ = writeln!(
            svg,
            r#"<text class="panel-title" x="{LEFT}" y="12" font-size="11">{}</text>"#,
            escape(&panel.name)
        );
        let y_of = |level: usize| PANEL_TOP + LEVEL * (level as f64 + 0.5);
        for (i, level) in levels.iter().enumerate() {
            let y = y_of(i);
            let _ = writeln!(
                svg,
                "<line class=\"grid\" x1=\"{LEFT}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#e5e5e5\"/>",
                width - RIGHT
            );
            let _ = writeln!(
                svg,
                r#"<text class="level" x="{}" y="{}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 3.0,
                escape(level)
            );
        }
        let axis_y = h - PANEL_BOTTOM + 4.0;
        for (x, (ordinal, id)) in gatherings.iter().enumerate() {
            if x > 0 && gatherings[x - 1].0 == *ordinal {
                continue;
            }
            let cx = LEFT + STEP * x as f64;
            let _ = writeln!(
                svg,
                "<line class=\"gathering\" x1=\"{cx}\" y1=\"{PANEL_TOP}\" x2=\"{cx}\" y2=\"{axis_y}\" stroke=\"#cccccc\"/>"
            );
            let _ = writeln!(
                svg,
                r#"<text class="tick" x="{}" y="{}">{}</text>"#,
                cx + 1.0,
                axis_y + 10.0,
                escape(id)
            );
        }
        for (x, label) in panel.labels.iter().enumerate() {
            let Some(label) = label else { continue };
            let level = levels.iter().position(|l| l == label).expect("label has a level");
            let _ = writeln!(
                svg,
                r#"<circle class="point" cx="{}" cy="{}" r="{RADIUS}" fill="{}"/>"#,
                LEFT + STEP * (x as f64 + 0.5),
                y_of(level),
                PALETTE[level % PALETTE.len()]
            );
        }
        svg.push_str("</g>\n");
        top += h;
    }
    svg.push_str("</svg>\n");
    svg
}
