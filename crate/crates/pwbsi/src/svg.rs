//! Static SVG plots with CSV data sidecars: histograms, scatter plots, the
//! folded eye and the sample-size envelope.

use std::fmt::Write as _;

use pwbsi_core::linksim::EyeDiagram;
use pwbsi_core::stats::SizeEnvelope;

use crate::numfmt::num;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plot frame mapping data ranges onto the drawing area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new((x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> Self {
        let widen = |a: f64, b: f64| if a == b { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        H - BOTTOM - (v - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn open(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, W / 2.0, escape(title))
            .unwrap();
        let (bx, by) = (LEFT, H - BOTTOM);
        writeln!(s, r#"<path d="M{bx:.1} {TOP:.1} V{by:.1} H{:.1}" fill="none" stroke="black"/>"#, W - RIGHT).unwrap();
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                self.x(fx),
                by + 16.0,
                crate::numfmt::sig(fx, 3)
            )
            .unwrap();
            writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                bx - 6.0,
                self.y(fy) + 4.0,
                crate::numfmt::sig(fy, 3)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            (LEFT + W - RIGHT) / 2.0,
            H - 12.0,
            escape(xlabel)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (TOP + H - BOTTOM) / 2.0,
            (TOP + H - BOTTOM) / 2.0,
            escape(ylabel)
        )
        .unwrap();
        s
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Equal-width bin counts over the data range; `(lower edge, upper edge, count)`.
pub fn histogram_bins(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let (lo, hi) = range(values.iter().copied());
    if !lo.is_finite() || bins == 0 {
        return Vec::new();
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts.into_iter().enumerate().map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c)).collect()
}

pub fn histogram_csv(bins: &[(f64, f64, usize)]) -> String {
    let mut s = String::from("bin_low,bin_high,count\n");
    for (a, b, c) in bins {
        writeln!(s, "{},{},{c}", num(*a), num(*b)).unwrap();
    }
    s
}

pub fn histogram_svg(bins: &[(f64, f64, usize)], title: &str, xlabel: &str) -> String {
    let x = (bins.first().map_or(0.0, |b| b.0), bins.last().map_or(1.0, |b| b.1));
    let top = bins.iter().map(|b| b.2).max().unwrap_or(1).max(1) as f64;
    let f = Frame::new(x, (0.0, top));
    let mut s = f.open(title, xlabel, "count");
    for (a, b, c) in bins {
        let (xa, xb, yc) = (f.x(*a), f.x(*b), f.y(*c as f64));
        writeln!(s, r##"<rect x="{xa:.2}" y="{yc:.2}" width="{:.2}" height="{:.2}" fill="#4878a8" stroke="white" stroke-width="0.5"/>"##, xb - xa, f.y(0.0) - yc)
            .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn scatter_csv(points: &[(String, f64, f64)], xname: &str, yname: &str) -> String {
    let mut s = format!("net_id,{xname},{yname}\n");
    for (id, x, y) in points {
        writeln!(s, "{id},{},{}", num(*x), num(*y)).unwrap();
    }
    s
}

pub fn scatter_svg(points: &[(String, f64, f64)], title: &str, xlabel: &str, ylabel: &str) -> String {
    let f = Frame::new(range(points.iter().map(|p| p.1)), range(points.iter().map(|p| p.2)));
    let mut s = f.open(title, xlabel, ylabel);
    for (_, x, y) in points {
        writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="#a84848" fill-opacity="0.6"/>"##, f.x(*x), f.y(*y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Eye traces as a matrix: one row per time sample, one column per trace.
pub fn eye_csv(eye: &EyeDiagram) -> String {
    let dt = eye.dt_s();
    let mut s = String::from("time_s");
    for k in 0..eye.trace_count() {
        write!(s, ",trace_{k}").unwrap();
    }
    s.push('\n');
    let len = eye.traces.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..len {
        s.push_str(&num(i as f64 * dt));
        for t in &eye.traces {
            s.push(',');
            if let Some(v) = t.get(i) {
                s.push_str(&num(*v));
            }
        }
        s.push('\n');
    }
    s
}

pub fn eye_svg(eye: &EyeDiagram, title: &str) -> String {
    let dt_ui = 1.0 / eye.samples_per_ui as f64;
    let len = eye.traces.iter().map(Vec::len).max().unwrap_or(1);
    let f = Frame::new((0.0, (len - 1) as f64 * dt_ui), range(eye.traces.iter().flatten().copied()));
    let mut s = f.open(title, "time (UI)", "volts");
    for t in &eye.traces {
        let mut d = String::new();
        for (i, v) in t.iter().enumerate() {
            write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, f.x(i as f64 * dt_ui), f.y(*v)).unwrap();
        }
        writeln!(s, r##"<path d="{d}" fill="none" stroke="#2060a0" stroke-opacity="0.25" stroke-width="0.8"/>"##).unwrap();
    }
    let th = f.y(eye.threshold_v);
    writeln!(s, r##"<path d="M{LEFT:.1} {th:.2} H{:.1}" stroke="#888" stroke-dasharray="4 3"/>"##, W - RIGHT).unwrap();
    s.push_str("</svg>\n");
    s
}

/// Envelope of σ̂/σ_pool against sample size on a log axis.
pub fn sample_size_svg(env: &[SizeEnvelope]) -> String {
    let lx = |n: usize| (n as f64).log10();
    let f = Frame::new(
        range(env.iter().map(|e| lx(e.n))),
        range(env.iter().flat_map(|e| [e.min_ratio, e.max_ratio])),
    );
    let mut s = f.open("Sample size versus σ", "log10(sample size)", "σ / σ pool");
    let series: [(&str, fn(&SizeEnvelope) -> f64); 5] = [
        ("#a84848", |e| e.min_ratio),
        ("#d08040", |e| e.q05_ratio),
        ("#2060a0", |e| e.median_ratio),
        ("#d08040", |e| e.q95_ratio),
        ("#a84848", |e| e.max_ratio),
    ];
    for (colour, value) in series {
        let mut d = String::new();
        for (i, e) in env.iter().enumerate() {
            write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { " L" }, f.x(lx(e.n)), f.y(value(e))).unwrap();
        }
        writeln!(s, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// TDR trace as `time_s, rho, z_ohm` (differential impedance).
pub fn tdr_csv(trace: &pwbsi_core::tdr::TdrTrace) -> String {
    let mut s = String::from("time_s,rho,z_ohm\n");
    for ((t, r), z) in trace.time_s.iter().zip(&trace.rho).zip(&trace.z_ohm) {
        writeln!(s, "{},{},{}", num(*t), num(*r), num(*z)).unwrap();
    }
    s
}
