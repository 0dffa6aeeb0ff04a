//! Tabular and binary outputs.
//!
//! Floats go out with 17 significant digits so that a CSV round-trips
//! every bit. JSON output carries the same rows as an array of objects.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde_json::{Map, Value};

use crate::exact_diag::write_grid_le;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn to_text(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or_else(|| Value::String(fmt_float(*x)), Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table {
            name: name.into(),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}.csv", self.name),
            Format::Json => format!("{}.json", self.name),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::to_text))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self.headers.iter().cloned().zip(row.iter().map(Cell::to_json)).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    /// Writes the table into `dir` and returns the path.
    pub fn save(&self, dir: &Path, format: Format) -> std::io::Result<PathBuf> {
        let path = dir.join(self.file_name(format));
        let w = BufWriter::new(File::create(&path)?);
        match format {
            Format::Csv => self.write_csv(w).map_err(std::io::Error::other)?,
            Format::Json => {
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, &self.to_json())?;
                writeln!(w)?;
                w.flush()?;
            }
        }
        Ok(path)
    }
}

/// Headerless row-major little-endian f64 dump; the shape goes in the file
/// name.
pub fn save_grid(dir: &Path, stem: &str, g: &DMatrix<f64>) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{stem}_{}x{}.f64le", g.nrows(), g.ncols()));
    let mut w = BufWriter::new(File::create(&path)?);
    write_grid_le(&mut w, g)?;
    w.flush()?;
    Ok(path)
}

/// Reads back a dump written by [`save_grid`].
pub fn read_grid(path: &Path, rows: usize, cols: usize) -> std::io::Result<DMatrix<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != rows * cols * 8 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "grid size mismatch"));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

/// A gnuplot script plotting column `y` against column `x` of a CSV table,
/// optionally one curve per distinct value of `group`.
pub fn gnuplot_script(table: &Table, x: &str, y: &str, group: Option<&str>) -> String {
    let col = |h: &str| table.headers.iter().position(|c| c == h).map_or(1, |i| i + 1);
    let file = table.file_name(Format::Csv);
    let (cx, cy) = (col(x), col(y));
    let mut s = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel '{x}'\nset ylabel '{y}'\nset terminal pngcairo size 900,600\nset output '{}.png'\n",
        table.name
    );
    match group {
        Some(g) => {
            let cg = col(g);
            let mut groups: Vec<String> = Vec::new();
            for row in &table.rows {
                let v = row[cg - 1].to_text();
                if !groups.contains(&v) {
                    groups.push(v);
                }
            }
            let curves: Vec<String> = groups
                .iter()
                .map(|v| format!("'{file}' using (strcol({cg}) eq '{v}' ? ${cx} : NaN):{cy} title '{g}={v}'"))
                .collect();
            s.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
        }
        None => s.push_str(&format!("plot '{file}' using {cx}:{cy} with linespoints\n")),
    }
    s
}

pub fn save_script(dir: &Path, table: &Table, script: &str) -> std::io::Result<PathBuf> {
    let path = dir.join(format!("{}.gp", table.name));
    std::fs::write(&path, script)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["x", "y", "label"]);
        t.push(vec![0.1.into(), 1i64.into(), "a".into()]);
        t.push(vec![(1.0 / 3.0).into(), Cell::Empty, Some(true).into()]);
        t
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,label"));
        let second = lines.nth(1).unwrap();
        let x: f64 = second.split(',').next().unwrap().parse().unwrap();
        assert_eq!(x, 1.0 / 3.0);
        assert!(second.ends_with(",,true"));
    }

    #[test]
    fn json_rows_are_objects() {
        let v = sample().to_json();
        assert_eq!(v[0]["label"], "a");
        assert!(v[1]["y"].is_null());
    }

    #[test]
    fn grid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = DMatrix::from_fn(3, 5, |i, j| i as f64 - 0.5 * j as f64);
        let path = save_grid(dir.path(), "g", &g).unwrap();
        assert!(path.ends_with("g_3x5.f64le"));
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[8..16], &(-0.5f64).to_le_bytes());
        assert_eq!(read_grid(&path, 3, 5).unwrap(), g);
    }

    #[test]
    fn script_mentions_columns() {
        let s = gnuplot_script(&sample(), "x", "y", Some("label"));
        assert!(s.contains("demo.csv") && s.contains("$1") && s.contains("strcol(3)"));
    }
}
