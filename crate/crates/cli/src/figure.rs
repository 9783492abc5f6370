//! Bias-curve series, their CSV form, and self-contained SVG plots.
//!
//! Series values are rounded to the CSV precision when a series is built,
//! so a plot drawn from a re-read CSV file is identical to the original.

use std::fmt::Write as _;

use i2bias_core::bias::BiasPoint;

use crate::error::{CliError, CliResult};

pub const SIGNIFICANT_DIGITS: i32 = 10;

/// Formats `v` in plain decimal notation with 10 significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn quantize(v: f64) -> f64 {
    fmt_sig(v).parse().expect("formatted float parses")
}

/// One curve: E(Î₀²) against K at a fixed true I².
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub i2_true: f64,
    pub x: Vec<u32>,
    pub y: Vec<f64>,
    /// Dotted line drawn at the true I².
    pub reference_line: Option<f64>,
}

impl FigureSeries {
    pub fn from_points(i2_true: f64, points: &[BiasPoint]) -> CliResult<Self> {
        let x: Vec<u32> = points.iter().map(|p| p.query.k).collect();
        let y = points.iter().map(|p| quantize(p.expectation)).collect();
        Self::new(i2_true, x, y)
    }

    pub fn new(i2_true: f64, x: Vec<u32>, y: Vec<f64>) -> CliResult<Self> {
        if x.len() != y.len() {
            return Err(CliError::invalid("series x and y lengths differ"));
        }
        if x.is_empty() {
            return Err(CliError::invalid("series is empty"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::invalid(
                "series K values must be strictly increasing",
            ));
        }
        let i2_true = quantize(i2_true);
        Ok(Self {
            i2_true,
            x,
            y,
            reference_line: Some(i2_true),
        })
    }

    pub fn bias(&self, i: usize) -> f64 {
        quantize(self.y[i] - self.i2_true)
    }
}

/// `k,expectation,bias`
pub fn series_to_csv(s: &FigureSeries) -> String {
    let mut out = String::from("k,expectation,bias\n");
    for i in 0..s.x.len() {
        let _ = writeln!(out, "{},{},{}", s.x[i], fmt_sig(s.y[i]), fmt_sig(s.bias(i)));
    }
    out
}

/// Long format for several series: `i2_true,k,expectation,bias`.
pub fn grid_to_csv(series: &[FigureSeries]) -> String {
    let mut out = String::from("i2_true,k,expectation,bias\n");
    for s in series {
        for i in 0..s.x.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_sig(s.i2_true),
                s.x[i],
                fmt_sig(s.y[i]),
                fmt_sig(s.bias(i))
            );
        }
    }
    out
}

fn parse_field<T: std::str::FromStr>(text: &str, line: usize, what: &str) -> CliResult<T> {
    text.trim()
        .parse()
        .map_err(|_| CliError::invalid(format!("line {line}: bad {what} `{text}`")))
}

/// Reads either CSV layout back into series, in file order.
pub fn read_curve_csv(text: &str) -> CliResult<Vec<FigureSeries>> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h.trim()).unwrap_or("");
    let long = match header {
        "k,expectation,bias" => false,
        "i2_true,k,expectation,bias" => true,
        other => {
            return Err(CliError::invalid(format!(
                "line 1: unknown curve header `{other}`"
            )))
        }
    };

    let mut groups: Vec<(f64, Vec<u32>, Vec<f64>)> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').collect();
        let expected = if long { 4 } else { 3 };
        if cols.len() != expected {
            return Err(CliError::invalid(format!(
                "line {line}: expected {expected} fields"
            )));
        }
        let rest = if long { &cols[1..] } else { &cols[..] };
        let k: u32 = parse_field(rest[0], line, "k")?;
        let e: f64 = parse_field(rest[1], line, "expectation")?;
        let b: f64 = parse_field(rest[2], line, "bias")?;
        // The short layout has no I² column; recover it as expectation − bias.
        let i2 = if long {
            parse_field(cols[0], line, "i2_true")?
        } else {
            quantize(e - b)
        };
        match groups.last_mut() {
            Some(g) if long && g.0 == i2 => {
                g.1.push(k);
                g.2.push(e);
            }
            Some(g) if !long => {
                g.1.push(k);
                g.2.push(e);
            }
            _ => groups.push((i2, vec![k], vec![e])),
        }
    }
    groups
        .into_iter()
        .map(|(i2, x, y)| FigureSeries::new(i2, x, y))
        .collect()
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

/// Axis range with "nice" tick spacing.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> (f64, f64, f64) {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let lo_r = (lo / step).floor() * step;
    let hi_r = ((hi / step).ceil() * step).max(lo_r + step);
    (lo_r, hi_r, step)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize + 1
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_string()
    } else {
        s
    }
}

/// Draws one panel into `out` at offset (ox, oy) with size (w, h).
fn draw_panel(out: &mut String, s: &FigureSeries, ox: f64, oy: f64, w: f64, h: f64, title: &str) {
    let pw = w - MARGIN_L - MARGIN_R;
    let ph = h - MARGIN_T - MARGIN_B;
    let (x0, x1) = (f64::from(s.x[0]), f64::from(*s.x.last().unwrap()));
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };

    let mut y_lo = s.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_hi = s.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = s.reference_line {
        y_lo = y_lo.min(r);
        y_hi = y_hi.max(r);
    }
    let (y_lo, y_hi, y_step) = nice_ticks(y_lo, y_hi, 5);
    let x_step = nice_ticks(x0, x1, 6).2.max(1.0).round();

    let px = |x: f64| ox + MARGIN_L + (x - x0) / x_span * pw;
    let py = |y: f64| oy + MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph;

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + MARGIN_T - 14.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#,
        ox + MARGIN_L,
        oy + MARGIN_T
    );

    let y_ticks = ((y_hi - y_lo) / y_step).round() as usize;
    for i in 0..=y_ticks {
        let yt = y_lo + i as f64 * y_step;
        let y = py(yt);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            ox + MARGIN_L - 5.0,
            ox + MARGIN_L,
            ox + MARGIN_L - 8.0,
            y + 4.0,
            fmt_tick(yt, y_step)
        );
    }
    let mut xt = (x0 / x_step).ceil() * x_step;
    while xt <= x1 + 1e-9 {
        let x = px(xt);
        let base = oy + MARGIN_T + ph;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{base:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            base + 5.0,
            base + 18.0,
            fmt_tick(xt, x_step)
        );
        xt += x_step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">Number of studies K</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + h - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">E(Î₀²)</text>"#,
        ox + 16.0,
        oy + MARGIN_T + ph / 2.0,
        ox + 16.0,
        oy + MARGIN_T + ph / 2.0
    );

    if let Some(r) = s.reference_line {
        let y = py(r);
        let _ = writeln!(
            out,
            r#"<line class="reference" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="gray" stroke-dasharray="3,4"/>"#,
            ox + MARGIN_L,
            ox + MARGIN_L + pw
        );
    }

    let mut d = String::new();
    for (i, (&k, &e)) in s.x.iter().zip(&s.y).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{:.2},{:.2} ", px(f64::from(k)), py(e));
    }
    let _ = writeln!(
        out,
        r#"<path class="curve" d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        d.trim_end()
    );
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn panel_title(i2: f64) -> String {
    let v = fmt_sig(i2);
    let v = if v.contains('.') {
        v.trim_end_matches('0').trim_end_matches('.')
    } else {
        &v
    };
    format!("I² = {v}")
}

pub fn render_svg(s: &FigureSeries) -> String {
    let mut out = svg_open(W, H);
    draw_panel(&mut out, s, 0.0, 0.0, W, H, &panel_title(s.i2_true));
    out.push_str("</svg>\n");
    out
}

/// Panels laid out row-major, three per row.
pub fn render_svg_grid(series: &[FigureSeries]) -> String {
    let cols = 3usize;
    let rows = series.len().div_ceil(cols).max(1);
    let (pw, ph) = (W * 0.75, H * 0.75);
    let mut out = svg_open(pw * cols as f64, ph * rows as f64);
    for (i, s) in series.iter().enumerate() {
        let ox = (i % cols) as f64 * pw;
        let oy = (i / cols) as f64 * ph;
        draw_panel(&mut out, s, ox, oy, pw, ph, &panel_title(s.i2_true));
    }
    out.push_str("</svg>\n");
    out
}

/// The `d` attributes of every curve path, in document order.
pub fn svg_path_data(svg: &str) -> Vec<String> {
    svg.lines()
        .filter(|l| l.contains(r#"class="curve""#))
        .filter_map(|l| {
            let start = l.find(r#" d=""#)? + 4;
            let end = start + l[start..].find('"')?;
            Some(l[start..end].to_string())
        })
        .collect()
}
