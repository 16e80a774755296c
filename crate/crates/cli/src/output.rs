//! Deterministic output writers. Every file starts with `#` comment
//! lines naming the subcommand and the SHA-256 of the resolved
//! configuration; floats are written with 17 significant digits so
//! reruns are byte-comparable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub struct OutputContext {
    dir: PathBuf,
    command: &'static str,
    config_hash: String,
}

impl OutputContext {
    pub fn new(dir: &Path, command: &'static str, config_hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config_hash,
        })
    }

    fn header(&self) -> String {
        format!(
            "# mpemba {} v{}\n# config sha256 {}\n",
            self.command,
            env!("CARGO_PKG_VERSION"),
            self.config_hash
        )
    }

    pub fn write_csv(
        &self,
        name: &str,
        columns: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> Result<(), CliError> {
        let mut body = self.header();
        let _ = writeln!(body, "{columns}");
        for row in rows {
            let _ = writeln!(body, "{row}");
        }
        self.write(name, &body)
    }

    /// Writes a JSON document with `command` and `config_sha256` keys
    /// injected at the top level.
    pub fn write_json(&self, name: &str, value: Value) -> Result<(), CliError> {
        let mut wrapped = serde_json::Map::new();
        wrapped.insert("command".into(), Value::String(self.command.into()));
        wrapped.insert("config_sha256".into(), Value::String(self.config_hash.clone()));
        match value {
            Value::Object(fields) => wrapped.extend(fields),
            other => {
                wrapped.insert("result".into(), other);
            }
        }
        let body = serde_json::to_string_pretty(&Value::Object(wrapped))
            .expect("json serializes");
        self.write(name, &format!("{body}\n"))
    }

    pub fn write_svg(&self, name: &str, plot: &Plot) -> Result<(), CliError> {
        self.write(name, &plot.render(&self.header()))
    }

    fn write(&self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }
}

/// Full-precision float formatting shared by all CSV writers.
pub fn sig(x: f64) -> String {
    format!("{x:.16e}")
}

const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

/// Minimal static line plot: labelled polylines on a framed canvas.
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<(String, Vec<(f64, f64)>)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
        }
    }

    pub fn add_series(&mut self, label: String, points: Vec<(f64, f64)>) {
        self.series.push((label, points));
    }

    fn render(&self, comment: &str) -> String {
        const W: f64 = 800.0;
        const H: f64 = 500.0;
        const M: f64 = 60.0;
        let points = self.series.iter().flat_map(|(_, p)| p.iter());
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !(x_min < x_max) {
            x_max = x_min + 1.0;
        }
        if !(y_min < y_max) {
            y_max = y_min + 1.0;
        }
        let sx = |x: f64| M + (x - x_min) / (x_max - x_min) * (W - 2.0 * M);
        let sy = |y: f64| H - M - (y - y_min) / (y_max - y_min) * (H - 2.0 * M);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">"#
        );
        for line in comment.lines() {
            let _ = writeln!(svg, "<!-- {} -->", line.trim_start_matches(['#', ' ']));
        }
        let _ = writeln!(
            svg,
            r##"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            W - 2.0 * M,
            H - 2.0 * M
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            self.title
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{} ∈ [{:.3}, {:.3}]</text>"#,
            W / 2.0,
            H - 18.0,
            self.x_label,
            x_min,
            x_max
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{} ∈ [{:.4}, {:.4}]</text>"#,
            H / 2.0,
            H / 2.0,
            self.y_label,
            y_min,
            y_max
        );
        for (k, (label, pts)) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
                W - M - 180.0,
                M + 18.0 + 16.0 * k as f64
            );
        }
        let _ = writeln!(svg, "</svg>");
        svg
    }
}
