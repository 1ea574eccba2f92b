//! Static SVG line plots: posterior samples in black, envelope in blue,
//! reference in red.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const TICKS: usize = 5;

#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub x_label: String,
    pub y_label: String,
    pub abscissa: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub envelope: Vec<Vec<f64>>,
    pub reference: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.03 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Path data with a fresh move at every non-finite gap.
fn path_data(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x.is_finite() && y.is_finite()) {
            pen_down = false;
            continue;
        }
        let cmd = if pen_down { 'L' } else { 'M' };
        let _ = write!(d, "{cmd}{:.2},{:.2} ", frame.px(x), frame.py(y));
        pen_down = true;
    }
    d.trim_end().to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (left, right) = (MARGIN, WIDTH - MARGIN);
    let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r##"<g stroke="#444" stroke-width="1" fill="none"><path d="M{left},{top} L{left},{bottom} L{right},{bottom}"/></g>"##
    );
    let _ = writeln!(svg, r##"<g font-family="sans-serif" font-size="11" fill="#222">"##);
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            svg,
            r##"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            bottom + 16.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 6.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r##"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"##,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    svg.push_str("</g>\n");
}

pub fn render(data: &PlotData) -> String {
    let all_y = data
        .samples
        .iter()
        .chain(&data.envelope)
        .chain(data.reference.iter())
        .flatten();
    let frame = Frame {
        x: range(data.abscissa.iter()),
        y: range(all_y),
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    let _ = writeln!(svg, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"##);
    axes(&mut svg, &frame, &data.x_label, &data.y_label);

    let _ = writeln!(
        svg,
        r##"<g class="samples" stroke="black" stroke-opacity="0.35" stroke-width="0.8" fill="none">"##
    );
    for ys in &data.samples {
        let _ = writeln!(svg, r##"<path d="{}"/>"##, path_data(&frame, &data.abscissa, ys));
    }
    svg.push_str("</g>\n");

    if !data.envelope.is_empty() {
        let _ = writeln!(
            svg,
            r##"<g class="envelope" stroke="blue" stroke-width="1.5" fill="none">"##
        );
        for ys in &data.envelope {
            let _ = writeln!(svg, r##"<path d="{}"/>"##, path_data(&frame, &data.abscissa, ys));
        }
        svg.push_str("</g>\n");
    }

    if let Some(ys) = &data.reference {
        let _ = writeln!(
            svg,
            r##"<path class="reference" stroke="red" stroke-width="1.8" fill="none" d="{}"/>"##,
            path_data(&frame, &data.abscissa, ys)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_start_new_subpaths() {
        let frame = Frame {
            x: (0.0, 1.0),
            y: (0.0, 1.0),
        };
        let d = path_data(&frame, &[0.0, 0.5, 1.0], &[0.0, f64::NAN, 1.0]);
        assert_eq!(d.matches('M').count(), 2);
        assert!(!d.contains('L'));
    }

    #[test]
    fn flat_data_still_gets_a_frame() {
        let (lo, hi) = range([2.0, 2.0].iter());
        assert!(hi > lo);
        assert_eq!(tick_label(-0.0001), "0");
        assert_eq!(tick_label(1.25), "1.25");
    }
}
