use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.replace([',', '\n'], ";"),
            Cell::Flag(b) => b.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

/// A failed grid point keeps its coordinates and records the message.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Ok(Vec<Cell>),
    Failed { key: Vec<Cell>, error: String },
}

/// Rows under fixed `(name, unit)` columns; a trailing `status` column is always added.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(columns: Vec<(&'static str, &'static str)>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| matches!(r, Row::Failed { .. })).count()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| *n == name)
    }

    /// Numeric values of one column over the successful rows.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter_map(|r| match r {
                Row::Ok(cells) => cells.get(i).and_then(Cell::as_f64),
                Row::Failed { .. } => None,
            })
            .collect()
    }

    /// CSV with `#` metadata lines, a header naming units, and 17 significant digits.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| format!("{n} [{u}]"))
            .chain(std::iter::once("status".to_owned()))
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for row in &self.rows {
            let (cells, status) = match row {
                Row::Ok(cells) => (cells.iter().map(Cell::render).collect::<Vec<_>>(), "ok".to_owned()),
                Row::Failed { key, error } => {
                    let mut c: Vec<String> = key.iter().map(Cell::render).collect();
                    c.resize(self.columns.len(), String::new());
                    (c, format!("error: {}", Cell::Text(error.clone()).render()))
                }
            };
            let _ = writeln!(s, "{},{status}", cells.join(","));
        }
        s
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
