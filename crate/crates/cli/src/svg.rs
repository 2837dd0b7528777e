//! Self-contained SVG line plots.

use std::fmt::Write;

pub const BLUE: &str = "#1f5fbf";
pub const RED: &str = "#c8281e";
pub const GREEN: &str = "#2a9a3c";
pub const GREY: &str = "#555555";

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: String,
    pub dashed: bool,
    /// Half-width of a shaded band drawn behind the line.
    pub band: Option<Vec<f64>>,
}

impl Series {
    pub fn line(label: &str, x: &[f64], y: &[f64], color: &str) -> Self {
        Self {
            label: label.to_string(),
            x: x.to_vec(),
            y: y.to_vec(),
            color: color.to_string(),
            dashed: false,
            band: None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_band(mut self, half_width: &[f64]) -> Self {
        self.band = Some(half_width.to_vec());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl PlotStyle {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            width: 640.0,
            height: 420.0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("series `{0}` has mismatched x/y/band lengths")]
    Mismatch(String),
}

const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders `series` into a deterministic SVG document.
pub fn emit_svg_lineplot(series: &[Series], style: &PlotStyle) -> Result<String, PlotError> {
    if series.iter().all(|s| s.x.is_empty()) {
        return Err(PlotError::Empty);
    }
    for s in series {
        let band_ok = s.band.as_ref().is_none_or(|b| b.len() == s.y.len());
        if s.x.len() != s.y.len() || !band_ok {
            return Err(PlotError::Mismatch(s.label.clone()));
        }
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (k, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
            let h = s.band.as_ref().map_or(0.0, |b| b[k]);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y - h);
            y1 = y1.max(y + h);
        }
    }
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 <= 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pw = style.width - MARGIN_L - MARGIN_R;
    let ph = style.height - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&style.title)
    );
    // axes and ticks
    let _ = writeln!(
        out,
        r#"<path d="M{l:.2},{t:.2}V{b:.2}H{r:.2}" fill="none" stroke="black"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = MARGIN_T + ph,
        r = MARGIN_L + pw
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(fx),
            MARGIN_T + ph + 16.0,
            tick_label(fx)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(fy) + 4.0,
            tick_label(fy)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        style.height - 10.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&style.y_label)
    );
    // bands first so every line sits on top
    for s in series.iter().filter(|s| !s.x.is_empty()) {
        if let Some(b) = &s.band {
            let mut d = String::new();
            for (k, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { "L" }, sx(x), sy(y + b[k]));
            }
            for k in (0..s.x.len()).rev() {
                let _ = write!(d, "L{:.2},{:.2}", sx(s.x[k]), sy(s.y[k] - b[k]));
            }
            let _ = writeln!(out, r#"<path d="{d}Z" fill="{}" fill-opacity="0.2" stroke="none"/>"#, s.color);
        }
    }
    for s in series.iter().filter(|s| !s.x.is_empty()) {
        let mut pts = String::new();
        for (k, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
            if k > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", sx(x), sy(y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            s.color
        );
    }
    for (k, s) in series.iter().enumerate() {
        let y = MARGIN_T + 10.0 + 18.0 * k as f64;
        let x = MARGIN_L + pw + 12.0;
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="1.6"{dash}/>"#,
            x + 22.0,
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 28.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
