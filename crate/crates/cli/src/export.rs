//! CSV and JSON artifacts, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use dwlab_core::linalg::CMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::CliError;

/// Round-trip representation: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn with_header<S: AsRef<str>>(columns: &[S]) -> Self {
        let mut csv = Self::default();
        csv.push_line(columns.iter().map(|c| c.as_ref().to_string()));
        csv
    }

    fn push_line(&mut self, cells: impl Iterator<Item = String>) {
        let cells: Vec<String> = cells.collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, values: &[f64]) {
        self.push_line(values.iter().map(|&v| num(v)));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Rows of `re,im` pairs.
pub fn matrix_csv(m: &CMatrix) -> String {
    let mut text = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .flat_map(|j| [num(m[(i, j)].re), num(m[(i, j)].im)])
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    text
}

pub fn complex_list_csv(values: &[Complex64]) -> String {
    let mut csv = Csv::with_header(&["re", "im"]);
    for z in values {
        csv.row(&[z.re, z.im]);
    }
    csv.text
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Output directory plus the formats to emit.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
}

impl Sink {
    pub fn csv(&self, name: &str, contents: &str) -> Result<(), CliError> {
        if self.csv {
            write_atomic(&self.dir.join(name), contents.as_bytes())?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if self.json {
            write_atomic(&self.dir.join(name), json_string(value).as_bytes())?;
        }
        Ok(())
    }
}
