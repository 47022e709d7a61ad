//! Scatter plots of ID versus OOD accuracy as standalone SVG, with a CSV of
//! the plotted points next to each figure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluation::{EvalResult, TrainCondition};
use crate::metrics::{line_fit, LineFit};

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub model_id: String,
    pub param_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSeries {
    pub label: String,
    pub points: Vec<ScatterPoint>,
    /// Present only when a least-squares fit exists for the points.
    pub fit: Option<LineFit>,
}

impl ScatterSeries {
    /// Builds a series and fits it when possible.
    pub fn new(label: impl Into<String>, points: Vec<ScatterPoint>) -> Self {
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
        ScatterSeries {
            label: label.into(),
            fit: line_fit(&xy).ok(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub size: f64,
    pub show_fit: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            title: String::new(),
            x_label: "clean accuracy".into(),
            y_label: "noisy / OOD accuracy".into(),
            size: 480.0,
            show_fit: true,
        }
    }
}

pub const GLYPHS: [&str; 5] = ["circle", "square", "triangle", "diamond", "cross"];
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const MARGIN: f64 = 56.0;

struct Frame {
    size: f64,
}

impl Frame {
    fn side(&self) -> f64 {
        self.size - 2.0 * MARGIN
    }
    fn px(&self, x: f64) -> f64 {
        MARGIN + x * self.side()
    }
    fn py(&self, y: f64) -> f64 {
        MARGIN + (1.0 - y) * self.side()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn glyph(out: &mut String, kind: &str, cx: f64, cy: f64, class: &str, color: &str, title: &str) {
    let r = 4.0;
    let body = match kind {
        "circle" => format!(r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r}""#),
        "square" => format!(
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}""#,
            cx - r,
            cy - r,
            2.0 * r,
            2.0 * r
        ),
        "triangle" => format!(
            r#"<polygon points="{cx:.2},{:.2} {:.2},{:.2} {:.2},{:.2}""#,
            cy - r,
            cx - r,
            cy + r,
            cx + r,
            cy + r
        ),
        "diamond" => format!(
            r#"<polygon points="{cx:.2},{:.2} {:.2},{cy:.2} {cx:.2},{:.2} {:.2},{cy:.2}""#,
            cy - r,
            cx + r,
            cy + r,
            cx - r
        ),
        _ => format!(
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke-width="2""#,
            cx - r,
            cy - r,
            cx + r,
            cy + r,
            cx - r,
            cy + r,
            cx + r,
            cy - r
        ),
    };
    let paint = if kind == "cross" {
        format!(r#"stroke="{color}" fill="none""#)
    } else {
        format!(r#"fill="{color}" fill-opacity="0.75""#)
    };
    let _ = writeln!(out, r#"  {body} class="{class}" {paint}><title>{}</title></{}>"#, escape(title), tag(kind));
}

fn tag(kind: &str) -> &'static str {
    match kind {
        "circle" => "circle",
        "square" => "rect",
        "triangle" | "diamond" => "polygon",
        _ => "path",
    }
}

/// Renders the scatter plot as an SVG document.
pub fn render_svg(series: &[ScatterSeries], options: &SvgOptions) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::Empty("scatter series".into()));
    }
    let f = Frame { size: options.size };
    let (lo, hi) = (f.px(0.0), f.px(1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}" font-family="sans-serif" font-size="12">"#,
        options.size
    );
    let _ = writeln!(s, "<!-- generator: robustline {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{lo:.2}" y="{lo:.2}" width="{0:.2}" height="{0:.2}"/></clipPath></defs>"#,
        f.side()
    );
    let _ = writeln!(
        s,
        r##"<rect x="{lo:.2}" y="{lo:.2}" width="{0:.2}" height="{0:.2}" fill="none" stroke="#444"/>"##,
        f.side()
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let (x, y) = (f.px(v), f.py(v));
        let _ = writeln!(
            s,
            r##"<line class="tick" x1="{x:.2}" y1="{hi:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.1}</text>"##,
            hi + 4.0,
            hi + 18.0
        );
        let _ = writeln!(
            s,
            r##"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{lo:.2}" y2="{y:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            lo - 4.0,
            lo - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (lo + hi) / 2.0,
        options.size - 12.0,
        escape(&options.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (lo + hi) / 2.0,
        escape(&options.y_label)
    );
    if !options.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            options.size / 2.0,
            escape(&options.title)
        );
    }
    let _ = writeln!(
        s,
        r##"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        f.px(0.0),
        f.py(0.0),
        f.px(1.0),
        f.py(1.0)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let kind = GLYPHS[i % GLYPHS.len()];
        let _ = writeln!(s, r#"<g class="series series-{i}" data-label="{}">"#, escape(&ser.label));
        if let (true, Some(fit)) = (options.show_fit, ser.fit) {
            let _ = writeln!(
                s,
                r#"  <line class="fit" clip-path="url(#plot)" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"/>"#,
                f.px(0.0),
                f.py(fit.intercept),
                f.px(1.0),
                f.py(fit.intercept + fit.slope)
            );
        }
        for p in &ser.points {
            let title = format!("{} ({} params): {:.4}, {:.4}", p.model_id, p.param_count, p.x, p.y);
            glyph(&mut s, kind, f.px(p.x), f.py(p.y), &format!("marker glyph-{kind}"), color, &title);
        }
        let _ = writeln!(s, "</g>");
        let ly = MARGIN + 8.0 + 16.0 * i as f64;
        glyph(&mut s, kind, lo + 12.0, ly, &format!("legend glyph-{kind}"), color, &ser.label);
        let r2 = ser.fit.map(|f| format!(" (R² = {:.2})", f.r_squared)).unwrap_or_default();
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}{r2}</text>"#,
            lo + 22.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// CSV of the plotted points: `series,model_id,param_count,x,y`.
pub fn points_csv(series: &[ScatterSeries]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "model_id", "param_count", "x", "y"])?;
    for ser in series {
        for p in &ser.points {
            w.write_record([
                ser.label.clone(),
                p.model_id.clone(),
                p.param_count.to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes the SVG to `path` and the point table to the same path with a
/// `.csv` extension. Returns the CSV path.
pub fn scatter_svg(series: &[ScatterSeries], path: &Path, options: &SvgOptions) -> Result<PathBuf> {
    let svg = render_svg(series, options)?;
    let csv = points_csv(series)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))?;
    let csv_path = path.with_extension("csv");
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}

/// One series per condition: x is accuracy on `id_set`, y on `test_set`.
pub fn series_from_results(
    results: &[EvalResult],
    conditions: &[TrainCondition],
    id_set: &str,
    test_set: &str,
) -> Result<Vec<ScatterSeries>> {
    let mut out = Vec::new();
    for &cond in conditions {
        let mut points = Vec::new();
        for r in results.iter().filter(|r| r.train_condition == cond && r.test_set == test_set) {
            let x = results
                .iter()
                .find(|o| o.train_condition == cond && o.test_set == id_set && o.model_id == r.model_id)
                .ok_or_else(|| Error::Unmatched(r.model_id.clone()))?;
            points.push(ScatterPoint {
                x: x.accuracy,
                y: r.accuracy,
                model_id: r.model_id.clone(),
                param_count: r.param_count,
            });
        }
        if points.is_empty() {
            return Err(Error::Empty(format!("no {test_set} results for {cond}")));
        }
        out.push(ScatterSeries::new(cond.as_str(), points));
    }
    Ok(out)
}
