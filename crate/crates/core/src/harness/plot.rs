//! Minimal static SVG charts: mean curves with a one-deviation band, and bars.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, mean, std)` in increasing `x`.
    pub points: Vec<(f64, f64, f64)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite()) {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let y = self.py(yv);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                l - 6.0,
                y + 4.0,
                tick(yv)
            );
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.px(xv),
                b + 16.0,
                tick(xv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 18.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 8.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
}

/// One polyline per series over a translucent mean ± std band.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| &s.points);
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, s) in pts {
        xlo = xlo.min(x);
        xhi = xhi.max(x);
        ylo = ylo.min(m - s);
        yhi = yhi.max(m + s);
    }
    let frame = Frame::new((xlo, xhi), (ylo, yhi));
    let mut out = String::new();
    header(&mut out, title);
    frame.axes(&mut out, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for &(x, m, sd) in &s.points {
            let _ = write!(band, "{:.2},{:.2} ", frame.px(x), frame.py(m + sd));
        }
        for &(x, m, sd) in s.points.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", frame.px(x), frame.py(m - sd));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|&(x, m, _)| format!("{:.2},{:.2}", frame.px(x), frame.py(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
    }
    legend(&mut out, &series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Bars of `(label, value, std)` with whiskers, on a range including zero.
pub fn bar_chart(title: &str, ylabel: &str, bars: &[(String, f64, f64)]) -> String {
    let mut ylo: f64 = 0.0;
    let mut yhi: f64 = 0.0;
    for &(_, v, s) in bars {
        ylo = ylo.min(v - s);
        yhi = yhi.max(v + s);
    }
    let frame = Frame::new((0.0, bars.len().max(1) as f64), (ylo, yhi));
    let mut out = String::new();
    header(&mut out, title);
    frame.axes(&mut out, "", ylabel);
    for (i, (_, v, s)) in bars.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let x0 = frame.px(i as f64 + 0.2);
        let w = frame.px(i as f64 + 0.8) - x0;
        let (top, bottom) = (frame.py(v.max(0.0)), frame.py(v.min(0.0)));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{top:.2}" width="{w:.2}" height="{:.2}" fill="{color}"/>"#,
            bottom - top
        );
        let cx = frame.px(i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            frame.py(v + s),
            frame.py(v - s)
        );
    }
    legend(&mut out, &bars.iter().map(|b| b.0.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_band_and_curve_per_series() {
        let s = |label: &str, off: f64| Series {
            label: label.into(),
            points: (1..=50).map(|i| (i as f64, i as f64 * 0.1 + off, 0.3)).collect(),
        };
        let svg = line_plot("returns", "episode", "return", &[s("a", 0.0), s("b<c", 1.0)]);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn bars_and_flat_input() {
        let svg = bar_chart("wins", "win rate", &[("a".into(), 0.5, 0.1), ("b".into(), 0.5, 0.0)]);
        assert_eq!(svg.matches("<line").count(), 2);
        let flat = line_plot("flat", "x", "y", &[Series { label: "z".into(), points: vec![(1.0, 0.0, 0.0)] }]);
        assert!(!flat.contains("NaN"));
    }
}
