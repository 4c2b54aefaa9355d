//! Minimal static SVG charts: scatter and line series on linear or
//! logarithmic axes. Output depends only on the input data, so charts are
//! byte-reproducible.

use std::fmt::Write;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Dots,
    Line,
    /// Dashed line without markers.
    Dashed,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    /// Palette slot; series sharing a slot share a colour.
    pub colour: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    /// Categorical tick labels replacing the numeric x axis.
    pub x_categories: Vec<(f64, String)>,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        } else if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 {
                lo.abs() * 0.1
            } else {
                0.5
            };
            (lo, hi) = (lo - pad, hi + pad);
        }
        let pad = (hi - lo) * 0.05;
        Self {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn transform(log: bool, v: f64) -> Option<f64> {
        let t = if log { v.log10() } else { v };
        t.is_finite().then_some(t)
    }

    /// Maps a transformed value onto `[0, 1]`.
    fn unit(&self, t: f64) -> f64 {
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in transformed units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i64, self.hi.floor() as i64);
            if b >= a && b - a <= 12 {
                return (a..=b)
                    .map(|k| (k as f64, format_number(10f64.powi(k as i32))))
                    .collect();
            }
        }
        let range = self.hi - self.lo;
        let raw = range / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|s| s * mag)
            .find(|s| range / s <= 6.0)
            .unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut k = (self.lo / step).ceil();
        while k * step <= self.hi + 1e-12 * step && out.len() < 20 {
            let t = k * step;
            let label = if self.log {
                format_number(10f64.powf(t))
            } else {
                format_number(t)
            };
            out.push((t, label));
            k += 1.0;
        }
        out
    }
}

fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else if a >= 100.0 || (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Chart {
    pub fn render(&self) -> String {
        let pts = |log_x: bool, log_y: bool| {
            self.series.iter().map(move |s| {
                s.points.iter().filter_map(move |&(x, y)| {
                    Some((Axis::transform(log_x, x)?, Axis::transform(log_y, y)?))
                })
            })
        };
        let xs = Axis::fit(
            pts(self.log_x, self.log_y)
                .flatten()
                .map(|p| p.0)
                .chain(self.x_categories.iter().map(|c| c.0)),
            self.log_x,
        );
        let ys = Axis::fit(
            pts(self.log_x, self.log_y).flatten().map(|p| p.1),
            self.log_y,
        );
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let px = |t: f64| LEFT + xs.unit(t) * plot_w;
        let py = |t: f64| TOP + (1.0 - ys.unit(t)) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
        );

        let x_ticks = if self.x_categories.is_empty() {
            xs.ticks()
        } else {
            self.x_categories.clone()
        };
        for (t, label) in x_ticks {
            let x = px(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                TOP + plot_h,
                TOP + plot_h + 5.0,
                TOP + plot_h + 18.0,
                escape(&label)
            );
        }
        for (t, label) in ys.ticks() {
            let y = py(t);
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT - 5.0,
                LEFT + plot_w,
                LEFT - 8.0,
                y + 4.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, (series, points)) in self
            .series
            .iter()
            .zip(pts(self.log_x, self.log_y))
            .enumerate()
        {
            let colour = PALETTE[series.colour % PALETTE.len()];
            let coords: Vec<(f64, f64)> = points.map(|(x, y)| (px(x), py(y))).collect();
            match series.mark {
                Mark::Dots => {
                    for (x, y) in &coords {
                        let _ = writeln!(
                            svg,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{colour}" fill-opacity="0.6"/>"#
                        );
                    }
                }
                Mark::Line | Mark::Dashed => {
                    let path: Vec<String> = coords
                        .iter()
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let dash = if series.mark == Mark::Dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"{dash}/>"#,
                        path.join(" ")
                    );
                    if series.mark == Mark::Line {
                        for (x, y) in &coords {
                            let _ = writeln!(
                                svg,
                                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{colour}"/>"#
                            );
                        }
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + plot_w + 15.0;
            let _ = writeln!(
                svg,
                r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{colour}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                ly - 10.0,
                lx + 18.0,
                ly,
                escape(&series.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}
