//! Tabular output as CSV with `#` metadata lines, or as JSON records.

use serde_json::{json, Map, Value};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:?}"),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(_) | Cell::Empty => Value::Null,
            Cell::I(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::S(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Ordered `key = value` lines written ahead of the data.
pub type Metadata = Vec<(String, String)>;

pub fn render(meta: &Metadata, tables: &[Table], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in meta {
                let _ = writeln!(out, "# {k}: {v}");
            }
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                if tables.len() > 1 {
                    let _ = writeln!(out, "# table: {}", t.name);
                }
                let _ = writeln!(out, "{}", t.columns.join(","));
                for r in &t.rows {
                    let line: Vec<String> = r.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", line.join(","));
                }
            }
            out
        }
        Format::Json => {
            let mut m = Map::new();
            for (k, v) in meta {
                m.insert(k.clone(), Value::String(v.clone()));
            }
            let mut ts = Map::new();
            for t in tables {
                let recs: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        let mut o = Map::new();
                        for (c, v) in t.columns.iter().zip(r) {
                            o.insert((*c).to_string(), v.json());
                        }
                        Value::Object(o)
                    })
                    .collect();
                ts.insert(t.name.clone(), Value::Array(recs));
            }
            let doc = json!({ "metadata": Value::Object(m), "tables": Value::Object(ts) });
            let mut s = serde_json::to_string_pretty(&doc).expect("json values always serialize");
            s.push('\n');
            s
        }
    }
}
