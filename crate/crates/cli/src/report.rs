//! `report.json`, `trace.csv` and `plot.svg`.
//!
//! Every number in a report is written as `{"value": x, "provenance": p}`
//! with `p` one of `computed`, `config` or `derived-oracle`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Computed,
    Config,
    DerivedOracle,
}

/// Wraps every number inside `v`.
pub fn tag(v: Value, p: Provenance) -> Value {
    match v {
        Value::Number(_) => json!({ "value": v, "provenance": p }),
        Value::Array(a) => Value::Array(a.into_iter().map(|x| tag(x, p)).collect()),
        Value::Object(o) => {
            if is_tagged(&o) {
                return Value::Object(o);
            }
            Value::Object(o.into_iter().map(|(k, x)| (k, tag(x, p))).collect())
        }
        other => other,
    }
}

fn is_tagged(o: &Map<String, Value>) -> bool {
    o.len() == 2 && o.contains_key("value") && o.contains_key("provenance")
}

/// A single tagged number; non-finite values become `null`.
pub fn num(x: f64, p: Provenance) -> Value {
    json!({ "value": x, "provenance": p })
}

/// Serializes and tags in one step.
pub fn tagged<T: Serialize>(v: &T, p: Provenance) -> Value {
    tag(serde_json::to_value(v).expect("report values serialize"), p)
}

/// True when every number under `v` sits in a provenance wrapper.
pub fn fully_tagged(v: &Value) -> bool {
    match v {
        Value::Number(_) => false,
        Value::Array(a) => a.iter().all(fully_tagged),
        Value::Object(o) if is_tagged(o) => o["value"].is_number() || o["value"].is_null(),
        Value::Object(o) => o.values().all(fully_tagged),
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "==")]
    Equal,
}

impl Comparison {
    pub fn holds(self, measured: f64, tolerance: f64) -> bool {
        match self {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
            Comparison::Above => measured > tolerance,
            Comparison::Equal => measured == tolerance,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Above => ">",
            Comparison::Equal => "==",
        }
    }
}

/// A named pass criterion: `measured <cmp> tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub tolerance_provenance: Provenance,
    pub pass: bool,
    pub note: Option<String>,
}

impl Criterion {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        comparison: Comparison,
        tolerance: f64,
        prov: Provenance,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            comparison,
            tolerance,
            tolerance_provenance: prov,
            pass: comparison.holds(measured, tolerance),
            note: None,
        }
    }

    /// A criterion whose computation itself failed.
    pub fn errored(
        name: impl Into<String>,
        comparison: Comparison,
        tolerance: f64,
        prov: Provenance,
        why: String,
    ) -> Self {
        Self {
            note: Some(why),
            pass: false,
            ..Self::new(name, f64::NAN, comparison, tolerance, prov)
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "measured": num(self.measured, Provenance::Computed),
            "comparison": self.comparison,
            "tolerance": num(self.tolerance, self.tolerance_provenance),
            "pass": self.pass,
            "note": self.note,
        })
    }
}

/// Rows of `trace.csv` with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Trace {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, RunError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        w.into_inner().map_err(|e| RunError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> RunError {
    RunError::Io(e.to_string())
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunError::Io(e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| RunError::Io(e.to_string()))?;
    tmp.persist(path).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(())
}

pub fn to_json_bytes(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json values serialize");
    out.push(b'\n');
    out
}

/// Human-readable rendering of a `report.json`.
pub fn pretty(report: &Value) -> String {
    let mut out = String::new();
    let s = |v: &Value| v.as_str().unwrap_or("?").to_string();
    out.push_str(&format!("experiment: {}\n", s(&report["experiment"])));
    out.push_str(&format!("status:     {}\n", s(&report["status"])));
    if let Some(code) = report["exit_code"]["value"].as_f64() {
        out.push_str(&format!("exit code:  {}\n", code as i64));
    }
    if let Some(reason) = report["reason"].as_str() {
        out.push_str(&format!("reason:     {reason}\n"));
    }
    if let Some(criteria) = report["criteria"].as_array() {
        let width = criteria
            .iter()
            .filter_map(|c| c["name"].as_str())
            .map(str::len)
            .max()
            .unwrap_or(0);
        out.push_str("criteria:\n");
        for c in criteria {
            let mark = if c["pass"].as_bool() == Some(true) {
                "PASS"
            } else {
                "FAIL"
            };
            out.push_str(&format!(
                "  [{mark}] {:width$}  {} {} {}",
                s(&c["name"]),
                plain(&c["measured"]),
                s(&c["comparison"]),
                plain(&c["tolerance"]),
            ));
            if let Some(note) = c["note"].as_str() {
                out.push_str(&format!("  ({note})"));
            }
            out.push('\n');
        }
    }
    out
}

fn plain(v: &Value) -> String {
    match v.get("value") {
        Some(Value::Number(n)) => match n.as_f64() {
            Some(x) => format!("{x:.6e}"),
            None => n.to_string(),
        },
        Some(Value::Null) => "NaN".into(),
        _ => v.to_string(),
    }
}

/// Log-log line plot of one or more series, as standalone SVG.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> Option<String> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, p)| p.iter().copied())
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |a: f64, b: f64| {
        if b - a < 1e-9 {
            (a - 0.5, b + 0.5)
        } else {
            (a - 0.05 * (b - a), b + 0.05 * (b - a))
        }
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 70.0, 160.0, 40.0, 50.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    ));
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - left - right,
        h - top - bottom
    ));
    for k in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = px(k as f64);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{top}\" x2=\"{x:.1}\" y2=\"{}\" stroke=\"#ddd\"/><text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">1e{k}</text>\n",
            h - bottom,
            h - bottom + 16.0
        ));
    }
    for k in (y0.ceil() as i64)..=(y1.floor() as i64) {
        let y = py(k as f64);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#ddd\"/><text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">1e{k}</text>\n",
            w - right,
            left - 6.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        left + (w - left - right) / 2.0,
        h - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        escape(y_label)
    ));
    for (k, (name, points)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|&&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x.log10()), py(y.log10())))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            svg.push_str(&format!("<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{color}\"/>\n"));
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{}</text>\n",
            w - right + 10.0,
            w - right + 30.0,
            w - right + 36.0,
            ly + 4.0,
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
