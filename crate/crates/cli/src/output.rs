//! CSV tables with a config-hash comment line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// Number formatting shared by all tables.
#[derive(Debug, Clone, Copy)]
pub struct Format {
    pub precision: Option<usize>,
}

impl Format {
    pub fn num(&self, x: f64) -> String {
        match self.precision {
            Some(p) if p > 0 => format!("{:.*e}", p - 1, x),
            _ => format!("{x:e}"),
        }
    }

    pub fn opt(&self, x: Option<f64>) -> String {
        x.map(|v| self.num(v)).unwrap_or_default()
    }
}

/// Rows of one CSV file, written in one go.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub comments: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Table {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `<dir>/<prefix><name>.csv`.
    pub fn write(&self, dir: &Path, prefix: &str, hash: &str) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{prefix}{}.csv", self.name));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut out = BufWriter::new(fs::File::create(&path).map_err(io)?);
        write!(out, "# config_hash={hash}\r\n").map_err(io)?;
        for c in &self.comments {
            write!(out, "# {c}\r\n").map_err(io)?;
        }
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(&mut out);
            let csv_err = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
            w.write_record(&self.header).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        out.flush().map_err(io)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_formatting() {
        let f = Format { precision: None };
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(f.num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(Format { precision: Some(3) }.num(0.012345), "1.23e-2");
    }

    #[test]
    fn writes_hash_then_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec!["1".into(), "has,comma".into()]);
        let p = t.write(dir.path(), "", "abc").unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "# config_hash=abc\r\na,b\r\n1,\"has,comma\"\r\n");
    }
}
