//! CSV tables: fixed headers, 17-significant-digit reals, atomic writes.

use std::io::{Read, Write};
use std::path::Path;

use super::HarnessError;
use crate::error::{Error, Result};
use crate::stats::{log_log_fit, LineFit};

/// Formats a real with 17 significant digits, enough to round-trip any f64.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A real, or an empty cell when absent.
pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory cannot fail");
        for row in &self.rows {
            w.write_record(row).expect("writing to memory cannot fail");
        }
        w.into_inner().expect("writing to memory cannot fail")
    }

    /// Writes through a temporary file in the target directory and renames
    /// it into place, so readers never see a partial file.
    pub fn write_atomic(&self, path: &Path) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", path.display()));
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(&self.to_csv_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x` over the rows of a CSV.
pub fn fit_slope_reader<R: Read>(reader: R, x_col: &str, y_col: &str) -> Result<LineFit> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::InvalidArgument(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column named `{name}`")))
    };
    let (xi, yi) = (col(x_col)?, col(y_col)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for (idx, name, out) in [(xi, x_col, &mut xs), (yi, y_col, &mut ys)] {
            let cell = record.get(idx).unwrap_or("");
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("column `{name}` has non-numeric cell {cell:?}")))?;
            if !(v > 0.0) {
                return Err(Error::NonPositiveValue { column: name.to_string(), value: v });
            }
            out.push(v);
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: xs.len() });
    }
    log_log_fit(&xs, &ys).ok_or_else(|| Error::InvalidArgument(format!("column `{x_col}` has no spread")))
}

pub fn fit_slope(path: &Path, x_col: &str, y_col: &str) -> Result<LineFit> {
    let file = std::fs::File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    fit_slope_reader(file, x_col, y_col)
}
