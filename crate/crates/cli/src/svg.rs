//! Minimal self-contained SVG rendering: polyline charts and an
//! equirectangular heatmap. CSV files are the data contract; these plots
//! are a convenience for eyeballing results.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct VMarker {
    pub x: f64,
    pub label: String,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.w
    }
    fn py(&self, y: f64) -> f64 {
        self.top + self.h - (y - self.y0) / (self.y1 - self.y0) * self.h
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Multi-series line chart with axes, ticks, legend, and optional dashed
/// vertical markers.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    markers: &[VMarker],
) -> String {
    let (width, height) = (820.0, 520.0);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x0, mut x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (my0, my1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    for m in markers {
        x0 = x0.min(m.x);
        x1 = x1.max(m.x);
    }
    let pad = ((my1 - my0) * 0.06).max(1e-12);
    let frame = Frame {
        x0,
        x1: if x1 > x0 { x1 } else { x0 + 1.0 },
        y0: my0 - pad,
        y1: my1 + pad,
        left: 78.0,
        top: 46.0,
        w: width - 78.0 - 24.0,
        h: height - 46.0 - 64.0,
    };

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"26\" font-size=\"17\" text-anchor=\"middle\">{title}</text>\n",
        frame.left + frame.w / 2.0
    );

    for t in nice_ticks(frame.x0, frame.x1) {
        let px = frame.px(t);
        let _ = write!(
            s,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            frame.top,
            frame.top + frame.h,
            frame.top + frame.h + 18.0,
            tick_label(t)
        );
    }
    for t in nice_ticks(frame.y0, frame.y1) {
        let py = frame.py(t);
        let _ = write!(
            s,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{:.1}\" y2=\"{py:.1}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            frame.left,
            frame.left + frame.w,
            frame.left - 8.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = write!(
        s,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"20\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">{y_label}</text>\n",
        frame.left,
        frame.top,
        frame.w,
        frame.h,
        frame.left + frame.w / 2.0,
        frame.top + frame.h + 42.0,
        frame.top + frame.h / 2.0,
        frame.top + frame.h / 2.0,
    );

    for m in markers {
        let px = frame.px(m.x);
        let _ = write!(
            s,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#888\" \
             stroke-dasharray=\"5,4\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#555\">{}</text>\n",
            frame.top,
            frame.top + frame.h,
            px + 5.0,
            frame.top + 16.0,
            m.label
        );
    }

    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", frame.px(x), frame.py(y)))
            .collect();
        let _ = write!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        );
        let ly = frame.top + 14.0 + 18.0 * k as f64;
        let lx = frame.left + frame.w - 150.0;
        let _ = write!(
            s,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    s
}

fn diverging(t: f64) -> String {
    // blue at -1, off-white at 0, red at +1
    let lerp = |a: f64, b: f64, u: f64| a + (b - a) * u;
    let (r, g, b) = if t < 0.0 {
        let u = (-t).min(1.0);
        (lerp(247.0, 33.0, u), lerp(247.0, 102.0, u), lerp(247.0, 172.0, u))
    } else {
        let u = t.min(1.0);
        (lerp(247.0, 178.0, u), lerp(247.0, 24.0, u), lerp(247.0, 43.0, u))
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Equirectangular heatmap of a function on the sphere, rendered from a grid
/// of midpoint samples (rows = theta, columns = phi). Values are colored on
/// a diverging scale centered at zero.
pub fn sphere_heatmap(title: &str, values: &[f64], n_theta: usize, n_phi: usize) -> String {
    let (pw, ph) = (720.0, 360.0);
    let (left, top) = (60.0, 44.0);
    let (width, height) = (pw + left + 30.0, ph + top + 92.0);
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);

    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"26\" font-size=\"17\" text-anchor=\"middle\">{title}</text>\n",
        left + pw / 2.0
    );
    let cw = pw / n_phi as f64;
    let ch = ph / n_theta as f64;
    for i in 0..n_theta {
        for j in 0..n_phi {
            let v = values[i * n_phi + j];
            let _ = write!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                left + j as f64 * cw,
                top + i as f64 * ch,
                cw + 0.5,
                ch + 0.5,
                diverging(v / vmax)
            );
        }
    }
    let _ = write!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">phi (0 to 2pi)</text>\n\
         <text x=\"22\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\" \
         transform=\"rotate(-90 22 {:.1})\">theta (0 to pi)</text>\n",
        left + pw / 2.0,
        top + ph + 24.0,
        top + ph / 2.0,
        top + ph / 2.0,
    );

    // colorbar
    let (by, bw, bh) = (top + ph + 42.0, 300.0, 14.0);
    let bx = left + pw / 2.0 - bw / 2.0;
    s.push_str("<defs><linearGradient id=\"cb\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"0\">\n");
    for k in 0..=10 {
        let t = -1.0 + 0.2 * k as f64;
        let _ = write!(
            s,
            "<stop offset=\"{}%\" stop-color=\"{}\"/>\n",
            k * 10,
            diverging(t)
        );
    }
    s.push_str("</linearGradient></defs>\n");
    let _ = write!(
        s,
        "<rect x=\"{bx:.1}\" y=\"{by:.1}\" width=\"{bw}\" height=\"{bh}\" fill=\"url(#cb)\" stroke=\"#444\"/>\n\
         <text x=\"{bx:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">0</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        by + bh + 16.0,
        tick_label(-vmax),
        bx + bw / 2.0,
        by + bh + 16.0,
        bx + bw,
        by + bh + 16.0,
        tick_label(vmax)
    );
    s.push_str("</svg>\n");
    s
}
