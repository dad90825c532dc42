use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// Fixed-width scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            // non-finite floats become null
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// A named rectangular result table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header line followed by one LF-terminated line per row.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    /// Array of objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, Value> =
                        self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything a command produces.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub config_echo: Value,
    /// The first table is the primary one.
    pub tables: Vec<Table>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    command: &'a str,
    config_echo: &'a Value,
    results: Value,
    timings_ms: &'a BTreeMap<String, f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let results: serde_json::Map<String, Value> = self.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect();
        let r = JsonReport { command: &self.command, config_echo: &self.config_echo, results: Value::Object(results), timings_ms: &self.timings_ms };
        let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
        s.push('\n');
        s
    }

    /// Output files and their contents. CSV puts the primary table at `path`
    /// and the rest next to it as `<stem>.<table>.csv`.
    pub fn render(&self, format: Format, path: Option<&Path>) -> Vec<(Option<PathBuf>, String)> {
        match format {
            Format::Json => vec![(path.map(Path::to_path_buf), self.to_json())],
            Format::Csv => {
                let mut out = Vec::new();
                for (i, t) in self.tables.iter().enumerate() {
                    let target = if i == 0 { path.map(Path::to_path_buf) } else { path.map(|p| sibling(p, &t.name)) };
                    if i == 0 || target.is_some() {
                        out.push((target, t.to_csv()));
                    }
                }
                out
            }
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{name}.csv"))
}

/// Write a rendered report; `None` means stdout.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<()> {
    for (target, text) in report.render(format, path) {
        match target {
            Some(p) => std::fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("scan", &["L", "N", "epsilon", "p_zero", "p_one", "gap"]);
        assert_eq!(t.to_csv(), "L,N,epsilon,p_zero,p_one,gap\n");
        assert_eq!(t.to_json(), Value::Array(vec![]));
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new("rows", &["b", "a"]);
        t.push(vec![Cell::Float(f64::NAN), 1usize.into()]);
        let r = Report { command: "betamax".into(), config_echo: Value::Null, tables: vec![t], timings_ms: BTreeMap::new() };
        let s = r.to_json();
        let keys: Vec<usize> = ["\"command\"", "\"config_echo\"", "\"results\"", "\"timings_ms\""].iter().map(|k| s.find(k).unwrap()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["results"]["rows"][0]["b"], Value::Null);
        assert!(!s.contains('\r'));
    }

    #[test]
    fn csv_siblings() {
        let r = Report {
            command: "x".into(),
            config_echo: Value::Null,
            tables: vec![Table::new("main", &["a"]), Table::new("extra", &["b"])],
            timings_ms: BTreeMap::new(),
        };
        let out = r.render(Format::Csv, Some(Path::new("/tmp/run.csv")));
        assert_eq!(out[1].0.as_deref(), Some(Path::new("/tmp/run.extra.csv")));
        assert_eq!(r.render(Format::Csv, None).len(), 1);
    }

    #[test]
    fn text_cells_are_quoted() {
        let mut t = Table::new("t", &["s"]);
        t.push(vec!["a,b".into()]);
        assert_eq!(t.to_csv(), "s\n\"a,b\"\n");
    }
}
