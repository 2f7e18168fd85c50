//! Self-contained SVG line chart of one bucket series.

use std::fmt::Write;

use crate::timeline::{BucketSeries, Granularity, Scope, SeriesClass};

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;
const COUNT_COLOR: &str = "#1f5fa8";
const PROPORTION_COLOR: &str = "#c0392b";

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Smallest "nice" axis maximum (1, 2 or 5 times a power of ten) >= `max`.
fn nice_max(max: u64) -> u64 {
    if max == 0 {
        return 1;
    }
    let mut base = 1u64;
    loop {
        for step in [1, 2, 5] {
            if step * base >= max {
                return step * base;
            }
        }
        base *= 10;
    }
}

fn label_step(buckets: usize, granularity: Granularity) -> usize {
    let preferred = match granularity {
        Granularity::Month => 12,
        Granularity::Quarter => 4,
        Granularity::Week => 52,
        Granularity::Year => 1,
    };
    let mut step = preferred;
    while buckets / step > 14 {
        step *= 2;
    }
    while step > 1 && buckets / step < 2 {
        step /= 2;
    }
    step.max(1)
}

/// Renders counts as a solid polyline (one vertex per bucket) and the
/// per-bucket proportion as a dashed polyline where 1.0 maps to the top of
/// the count axis.
pub fn render_svg(series: &BucketSeries, granularity: Granularity, width: u32, height: u32) -> String {
    let (w, h) = (f64::from(width), f64::from(height));
    let plot_w = (w - MARGIN_LEFT - MARGIN_RIGHT).max(1.0);
    let plot_h = (h - MARGIN_TOP - MARGIN_BOTTOM).max(1.0);
    let n = series.points.len();
    let y_max = nice_max(series.points.iter().map(|p| p.count).max().unwrap_or(0));
    let x_at = |i: usize| -> f64 {
        if n <= 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let y_at = |v: f64| -> f64 { MARGIN_TOP + plot_h * (1.0 - v / y_max as f64) };

    let scope = match &series.scope {
        Scope::User(u) => format!("user {u}"),
        Scope::AllUsers => "all users".to_string(),
    };
    let what = match series.class {
        SeriesClass::Volume => "all posts".to_string(),
        SeriesClass::Emotion(c) => format!("posts labelled {c}"),
    };
    let title = format!("{what} per {granularity}, {scope}");

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(&title)
    );

    let bottom = MARGIN_TOP + plot_h;
    let right = MARGIN_LEFT + plot_w;
    for k in 0..=4u64 {
        let v = y_max * k / 4;
        let y = y_at(v as f64);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#e0e0e0" stroke-width="1"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{bottom:.2}" stroke="#333333" stroke-width="1"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}" stroke="#333333" stroke-width="1"/>"##
    );

    let step = label_step(n, granularity);
    for (i, p) in series.points.iter().enumerate().step_by(step) {
        let x = x_at(i);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333" stroke-width="1"/>"##,
            bottom + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            p.start.format("%Y-%m-%d")
        );
    }

    let count_points: Vec<String> = series
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{:.2},{:.2}", x_at(i), y_at(p.count as f64)))
        .collect();
    let proportion_points: Vec<String> = series
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{:.2},{:.2}", x_at(i), y_at(p.proportion() * y_max as f64)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline id="count" fill="none" stroke="{COUNT_COLOR}" stroke-width="1.5" points="{}"/>"#,
        count_points.join(" ")
    );
    let _ = writeln!(
        svg,
        r#"<polyline id="proportion" fill="none" stroke="{PROPORTION_COLOR}" stroke-width="1" stroke-dasharray="4 3" points="{}"/>"#,
        proportion_points.join(" ")
    );

    let legend_y = h - 22.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{COUNT_COLOR}" stroke-width="1.5"/>"#,
        MARGIN_LEFT + 24.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}">count: posts in each {granularity} (not cumulative)</text>"#,
        MARGIN_LEFT + 30.0,
        legend_y + 4.0
    );
    let second_x = MARGIN_LEFT + plot_w / 2.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{second_x:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{PROPORTION_COLOR}" stroke-width="1" stroke-dasharray="4 3"/>"#,
        second_x + 24.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}">proportion of bucket posts (1.0 = {y_max})</text>"#,
        second_x + 30.0,
        legend_y + 4.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Number of vertices in the polyline with the given id.
pub fn polyline_vertices(svg: &str, id: &str) -> Option<usize> {
    let marker = format!(r#"<polyline id="{id}""#);
    let line = svg.lines().find(|l| l.starts_with(&marker))?;
    let start = line.find(r#"points=""#)? + r#"points=""#.len();
    let end = start + line[start..].find('"')?;
    let points = line[start..end].trim();
    Some(if points.is_empty() { 0 } else { points.split(' ').count() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::SeriesPoint;
    use chrono::NaiveDate;

    fn series(counts: &[u64]) -> BucketSeries {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        BucketSeries {
            scope: Scope::User("a<b".into()),
            class: SeriesClass::Volume,
            points: counts
                .iter()
                .enumerate()
                .map(|(i, &c)| SeriesPoint {
                    start: start + chrono::Months::new(i as u32),
                    count: c,
                    total: c,
                })
                .collect(),
        }
    }

    #[test]
    fn one_vertex_per_bucket() {
        let counts: Vec<u64> = (0..84).map(|i| i % 7).collect();
        let svg = render_svg(&series(&counts), Granularity::Month, 960, 420);
        assert_eq!(polyline_vertices(&svg, "count"), Some(84));
        assert_eq!(polyline_vertices(&svg, "proportion"), Some(84));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn single_and_empty_series() {
        let svg = render_svg(&series(&[3]), Granularity::Month, 400, 300);
        assert_eq!(polyline_vertices(&svg, "count"), Some(1));
        let svg = render_svg(&series(&[]), Granularity::Month, 400, 300);
        assert_eq!(polyline_vertices(&svg, "count"), Some(0));
    }

    #[test]
    fn nice_axis() {
        assert_eq!(nice_max(0), 1);
        assert_eq!(nice_max(7), 10);
        assert_eq!(nice_max(11), 20);
        assert_eq!(nice_max(40), 50);
        assert_eq!(nice_max(500), 500);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = series(&[1, 4, 2, 8]);
        assert_eq!(
            render_svg(&s, Granularity::Month, 600, 300),
            render_svg(&s, Granularity::Month, 600, 300)
        );
    }
}
