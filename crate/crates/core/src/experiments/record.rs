//! Observation rows and their CSV form.
//!
//! Every row starts with `experiment,replica,master,stream`, followed by the
//! experiment's own columns in a fixed order. Empty cells mark values that do
//! not apply (a voided observation, or a column unused by that row's arm).

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::rng::RngSeed;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

/// One observation: a replica at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsRecord {
    pub experiment: &'static str,
    pub replica: u64,
    pub seed: RngSeed,
    pub fields: Vec<(&'static str, Cell)>,
}

impl StatsRecord {
    pub fn new(experiment: &'static str, replica: u64, seed: RngSeed) -> Self {
        StatsRecord {
            experiment,
            replica,
            seed,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, column: &'static str, value: impl Into<Cell>) -> Self {
        self.fields.push((column, value.into()));
        self
    }

    pub fn get(&self, column: &str) -> Option<&Cell> {
        self.fields.iter().find(|(c, _)| *c == column).map(|(_, v)| v)
    }

    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = vec!["experiment", "replica", "master", "stream"];
        cols.extend(self.fields.iter().map(|(c, _)| *c));
        cols
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("row {row} has columns that differ from the header")]
    Schema { row: usize },
    #[error("row {row}, column {column}: non-finite value")]
    NonFinite { row: usize, column: &'static str },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes a header and one row per record. All records must share columns.
pub fn write_csv<W: Write>(records: &[StatsRecord], out: W) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = records.first() else {
        w.flush()?;
        return Ok(());
    };
    let header = first.columns();
    w.write_record(&header)?;
    for (row, r) in records.iter().enumerate() {
        if r.columns() != header {
            return Err(RecordError::Schema { row });
        }
        let mut cells = vec![
            r.experiment.to_string(),
            r.replica.to_string(),
            r.seed.master.to_string(),
            r.seed.stream.to_string(),
        ];
        for (column, value) in &r.fields {
            if matches!(value, Cell::Real(x) if !x.is_finite()) {
                return Err(RecordError::NonFinite { row, column });
            }
            cells.push(value.to_string());
        }
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to a temporary file beside `path`, then renames it into
/// place, so readers never see a partial file.
pub fn emit_csv(records: &[StatsRecord], path: &Path) -> Result<(), RecordError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_csv(records, &mut tmp)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
