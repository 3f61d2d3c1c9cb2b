//! Tables and their `.dat` / CSV / JSON renderings.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;

pub const GENERATOR: &str = concat!("tfim ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    /// A point whose computation failed; rendered as `nan` / null.
    Gap,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    /// 16 significant digits, exponent form: stable across platforms.
    fn plain(&self) -> String {
        match self {
            // adding 0.0 folds −0 into +0
            Cell::Num(v) if v.is_finite() => format!("{:.15e}", v + 0.0),
            Cell::Num(_) | Cell::Gap => "nan".to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Gap => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form remarks (gaps, chosen strings); one header line each.
    pub notes: Vec<String>,
    /// Scalar results, kept in insertion order.
    pub summary: Vec<(String, Cell)>,
}

impl Document {
    pub fn new(command: &str, params: Vec<(String, String)>, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            params,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn summarize(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn gaps(&self) -> usize {
        self.rows.iter().filter(|r| r.contains(&Cell::Gap)).count()
    }

    fn header(&self) -> String {
        let mut s = format!("# {GENERATOR} {}\n", self.command);
        for (k, v) in &self.params {
            s += &format!("# {k} = {v}\n");
        }
        for (k, v) in &self.summary {
            s += &format!("# result {k} = {}\n", v.plain());
        }
        for n in &self.notes {
            s += &format!("# note: {n}\n");
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Dat => {
                let mut s = self.header();
                s += &format!("# {}\n", self.columns.join(" "));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::plain).collect();
                    s += &cells.join(" ");
                    s.push('\n');
                }
                s
            }
            Format::Csv => {
                let mut s = self.header();
                s += &self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(|c| csv_field(&c.plain())).collect();
                    s += &cells.join(",");
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let params: serde_json::Map<String, Value> = self
                    .params
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::from_str(v).unwrap_or(json!(v))))
                    .collect();
                let summary: serde_json::Map<String, Value> =
                    self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let doc = json!({
                    "generator": GENERATOR,
                    "command": self.command,
                    "parameters": params,
                    "summary": summary,
                    "notes": self.notes,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Write via a temporary file in the target directory and rename, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> Document {
        let mut d = Document::new("demo", vec![("n".into(), "4".into())], &["t", "value"]);
        d.push(vec![Cell::Num(0.0), Cell::Num(1.0 / 3.0)]);
        d.push(vec![Cell::Num(0.5), Cell::Gap]);
        d.note("gap at t = 0.5");
        d
    }

    #[test]
    fn dat_has_sixteen_digits() {
        let s = doc().render(Format::Dat);
        assert!(s.starts_with("# tfim "));
        assert!(s.contains("3.333333333333333e-1"));
        assert!(s.lines().last().unwrap().ends_with("nan"));
    }

    #[test]
    fn json_maps_gaps_to_null() {
        let v: Value = serde_json::from_str(&doc().render(Format::Json)).unwrap();
        assert!(v["rows"][1][1].is_null());
        assert_eq!(v["parameters"]["n"], json!(4));
    }

    #[test]
    fn csv_header_row_follows_comments() {
        let s = doc().render(Format::Csv);
        let first_data = s.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(first_data, "t,value");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/out.dat");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
