//! Static SVG rendering for loss curves and eigenvalue scatters.

use num_complex::Complex64;
use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
/// Points drawn per curve; longer series are strided.
const MAX_POINTS: usize = 2000;
const PALETTE: &[&str] = &["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub enum SvgError {
    Empty(String),
}

impl std::fmt::Display for SvgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvgError::Empty(what) => write!(f, "invalid input: {what}"),
        }
    }
}

impl std::error::Error for SvgError {}

/// One named curve of (x, y) points.
#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Points (i, v) for a per-step sequence; non-finite values are skipped.
    pub fn from_values(name: &str, values: &[f64]) -> Self {
        let points = values.iter().enumerate().filter(|(_, v)| v.is_finite()).map(|(i, &v)| (i as f64, v)).collect();
        Series { name: name.to_string(), points }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Loss curves on a log₁₀ loss axis against a linear step axis.
///
/// Non-positive losses are drawn at the smallest positive value present.
pub fn loss_curves(series: &[Series], title: &str) -> Result<String, SvgError> {
    if series.is_empty() {
        return Err(SvgError::Empty("no series to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.is_empty()) {
        return Err(SvgError::Empty(format!("series '{}' has no points", s.name)));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let floor = all().map(|p| p.1).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-12 };
    let ly = |v: f64| v.max(floor).log10();
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(ly(p.1)), b.max(ly(p.1))));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (y0, y1) = (y0.floor(), y1.ceil());
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (ly(v) - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let decades = (y1 - y0) as i64;
    let stride = (decades / 8).max(1);
    for k in (0..=decades).step_by(stride as usize) {
        let e = y0 as i64 + k;
        let y = HEIGHT - MARGIN - (k as f64) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            WIDTH - MARGIN,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    for (k, label) in [(0.0, x0), (1.0, x1)] {
        let x = MARGIN + k * (WIDTH - 2.0 * MARGIN);
        let _ =
            writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, HEIGHT - MARGIN + 16.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">loss (log scale)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let step = s.points.len().div_ceil(MAX_POINTS).max(1);
        let mut d = String::new();
        let mut pts: Vec<&(f64, f64)> = s.points.iter().step_by(step).collect();
        if let Some(last) = s.points.last() {
            if !std::ptr::eq(*pts.last().unwrap(), last) {
                pts.push(last);
            }
        }
        if pts.len() == 1 {
            // a lone point still gets a visible segment
            let (x, v) = *pts[0];
            let _ = write!(d, "M {:.2} {:.2} L {:.2} {:.2}", sx(x) - 3.0, sy(v), sx(x) + 3.0, sy(v));
        } else {
            for (j, &&(x, v)) in pts.iter().enumerate() {
                let _ = write!(d, "{} {:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(x), sy(v));
            }
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let ly = MARGIN + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - MARGIN - 130.0,
            WIDTH - MARGIN - 110.0,
            WIDTH - MARGIN - 104.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Eigenvalues in the complex plane with the unit circle in red, equal aspect.
pub fn eigen_scatter(eigenvalues: &[Complex64], title: &str) -> Result<String, SvgError> {
    if eigenvalues.is_empty() {
        return Err(SvgError::Empty("no eigenvalues to plot".into()));
    }
    let extent =
        eigenvalues.iter().filter(|z| z.is_finite()).map(|z| z.re.abs().max(z.im.abs())).fold(1.0, f64::max) * 1.1;
    let side = HEIGHT - 2.0 * MARGIN;
    let (cx, cy) = (WIDTH / 2.0, HEIGHT / 2.0 + 10.0);
    let scale = side / (2.0 * extent);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="#999999"/><line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#999999"/>"##,
        cx - side / 2.0,
        cx + side / 2.0,
        cy - side / 2.0,
        cy + side / 2.0
    );
    let _ = writeln!(
        out,
        r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="red" stroke-width="1.5"/>"#,
        scale
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">Re</text>"#, cx + side / 2.0 + 4.0, cy + 4.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Im</text>"#, cx, cy - side / 2.0 - 4.0);
    for z in eigenvalues.iter().filter(|z| z.is_finite()) {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
            cx + z.re * scale,
            cy - z.im * scale
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
