use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl ArtifactHeader {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self { config_hash, seed, version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Num(v) if v.is_finite() => (*v).into(),
            Cell::Num(_) => serde_json::Value::Null,
            Cell::Text(s) => s.clone().into(),
        }
    }
}

/// Streams one table to disk as CSV (two `#` header lines, then the body)
/// or as a JSON object holding the header fields, column names, and rows.
pub struct TableWriter {
    out: BufWriter<File>,
    format: OutputFormat,
    path: PathBuf,
    rows: u64,
}

impl TableWriter {
    pub fn create(dir: &Path, stem: &str, format: OutputFormat, header: &ArtifactHeader, columns: &[&str]) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let mut out = BufWriter::new(File::create(&path)?);
        match format {
            OutputFormat::Csv => {
                let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                writeln!(out, "# generated_unix={stamp}")?;
                writeln!(out, "# config_hash={}, seed={}, version={}", header.config_hash, header.seed, header.version)?;
                writeln!(out, "{}", columns.join(","))?;
            }
            OutputFormat::Json => {
                write!(
                    out,
                    "{{\"config_hash\":{},\"seed\":{},\"version\":{},\"columns\":{},\"rows\":[",
                    serde_json::to_string(&header.config_hash)?,
                    header.seed,
                    serde_json::to_string(&header.version)?,
                    serde_json::to_string(columns)?,
                )?;
            }
        }
        Ok(Self { out, format, path, rows: 0 })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        match self.format {
            OutputFormat::Csv => {
                let line: Vec<String> = cells.iter().map(Cell::csv).collect();
                writeln!(self.out, "{}", line.join(","))?;
            }
            OutputFormat::Json => {
                let values: Vec<serde_json::Value> = cells.iter().map(Cell::json).collect();
                let sep = if self.rows == 0 { "\n" } else { ",\n" };
                write!(self.out, "{sep}{}", serde_json::to_string(&values)?)?;
            }
        }
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<PathBuf> {
        if self.format == OutputFormat::Json {
            writeln!(self.out, "\n]}}")?;
        }
        self.out.flush()?;
        Ok(self.path)
    }
}

/// CSV body without the timestamp line, for reproducibility checks.
pub fn csv_body(text: &str) -> &str {
    match text.split_once('\n') {
        Some((first, rest)) if first.starts_with("# generated") => rest,
        _ => text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -123456.789e10, 0.0] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn csv_and_json_tables() {
        let dir = tempfile::tempdir().unwrap();
        let header = ArtifactHeader::new("sha256:ab".into(), 7);
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let mut w = TableWriter::create(dir.path(), "t", format, &header, &["a", "b"]).unwrap();
            w.row(&[1u64.into(), 0.5.into()]).unwrap();
            w.row(&[2u64.into(), f64::NAN.into()]).unwrap();
            let path = w.finish().unwrap();
            let text = std::fs::read_to_string(path).unwrap();
            match format {
                OutputFormat::Csv => {
                    let body = csv_body(&text);
                    assert!(body.starts_with("# config_hash=sha256:ab, seed=7, version="));
                    assert!(body.ends_with("a,b\n1,5.0000000000000000e-1\n2,NaN\n"), "{body}");
                }
                OutputFormat::Json => {
                    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                    assert_eq!(v["seed"], 7);
                    assert_eq!(v["rows"][0][1], 0.5);
                    assert!(v["rows"][1][1].is_null());
                }
            }
        }
    }
}
