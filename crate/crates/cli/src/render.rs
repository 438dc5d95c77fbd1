use serde_json::{Map, Value};
use spg_core::rational::{format_decimal, format_f64, format_rational};
use spg_core::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Empty,
    Text(String),
    Rat(Rational),
    Float(f64),
    Flag(bool),
    Count(usize),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Rational> for Cell {
    fn from(r: Rational) -> Self {
        Cell::Rat(r)
    }
}

impl From<&Rational> for Cell {
    fn from(r: &Rational) -> Self {
        Cell::Rat(r.clone())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Count(n)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

/// One report: a header, rows, and trailing `key: value` notes.
#[derive(Debug, Clone, Default)]
pub struct Sheet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<(&'static str, Cell)>,
}

impl Sheet {
    pub fn new(columns: &[&str]) -> Sheet {
        Sheet {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Sheet::default()
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.notes.push((key, value.into()));
    }

    pub fn render(&self, format: Format, decimal: bool) -> String {
        match format {
            Format::Table => self.table(decimal),
            Format::Csv => self.csv(decimal),
            Format::Json => self.json(decimal),
        }
    }

    fn table(&self, decimal: bool) -> String {
        let text: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| plain(c, decimal)).collect())
            .collect();
        let mut width: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &text {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: Vec<&str>| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&width).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                s.push_str(cell);
                if i + 1 < cells.len() {
                    s.push_str(&" ".repeat(w - cell.chars().count()));
                }
            }
            s.trim_end().to_string()
        };
        let mut out = String::new();
        if !self.columns.is_empty() {
            out.push_str(&line(self.columns.iter().map(String::as_str).collect()));
            out.push('\n');
            for row in &text {
                out.push_str(&line(row.iter().map(String::as_str).collect()));
                out.push('\n');
            }
        }
        if !self.notes.is_empty() && !self.rows.is_empty() {
            out.push('\n');
        }
        for (k, v) in &self.notes {
            out.push_str(&format!("{k}: {}\n", plain(v, decimal)));
        }
        out
    }

    fn csv(&self, decimal: bool) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| quote(&plain(c, decimal))).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.notes {
            let mut cells = vec![quote(k), quote(&plain(v, decimal))];
            cells.resize(self.columns.len().max(2), String::new());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, decimal: bool) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut obj = Map::new();
                for (k, c) in self.columns.iter().zip(r) {
                    if !matches!(c, Cell::Empty) {
                        obj.insert(k.clone(), value(c, decimal));
                    }
                }
                Value::Object(obj)
            })
            .collect();
        let mut doc = Map::new();
        doc.insert("rows".into(), Value::Array(rows));
        if !self.notes.is_empty() {
            let notes: Map<String, Value> = self
                .notes
                .iter()
                .map(|(k, v)| (k.to_string(), value(v, decimal)))
                .collect();
            doc.insert("notes".into(), Value::Object(notes));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        s.push('\n');
        s
    }
}

fn plain(c: &Cell, decimal: bool) -> String {
    match c {
        Cell::Empty => String::new(),
        Cell::Text(s) => s.clone(),
        Cell::Rat(r) if decimal => format_decimal(r),
        Cell::Rat(r) => format_rational(r),
        Cell::Float(x) => format_f64(*x),
        Cell::Flag(b) => b.to_string(),
        Cell::Count(n) => n.to_string(),
    }
}

fn value(c: &Cell, decimal: bool) -> Value {
    match c {
        Cell::Flag(b) => Value::Bool(*b),
        Cell::Count(n) => Value::from(*n),
        Cell::Empty => Value::Null,
        other => Value::String(plain(other, decimal)),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
