use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

pub const CSV_HEADER: [&str; 5] = ["run_id", "timestamp", "metric", "index", "value"];

/// One machine-readable measurement. `timestamp` is simulation time (or
/// the sample position for time-free runs).
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub run_id: String,
    pub timestamp: f64,
    pub metric: String,
    /// Shell, member or other integer index.
    pub index: Option<i64>,
    /// `None` (and any non-finite value) is written as `degenerate`.
    pub value: Option<f64>,
}

impl ResultRow {
    pub fn new(run_id: &str, timestamp: f64, metric: impl Into<String>, value: f64) -> Self {
        Self {
            run_id: run_id.to_string(),
            timestamp,
            metric: metric.into(),
            index: None,
            value: Some(value),
        }
    }

    pub fn with_index(mut self, index: i64) -> Self {
        self.index = Some(index);
        self
    }

    pub fn with_value(mut self, value: Option<f64>) -> Self {
        self.value = value;
        self
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

/// Streaming CSV writer with a header row.
pub struct ResultWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl ResultWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        inner.write_record(CSV_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        let ts = format_float(row.timestamp);
        let index = row.index.map(|i| i.to_string()).unwrap_or_default();
        let value = match row.value {
            Some(v) if v.is_finite() => format_float(v),
            _ => "degenerate".to_string(),
        };
        self.inner
            .write_record([row.run_id.as_str(), &ts, &row.metric, &index, &value])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| crate::Error::Io(e.into_error()))
    }
}

/// Writes `rows` to `path`; rows are consumed one at a time.
pub fn emit_csv(rows: impl IntoIterator<Item = ResultRow>, path: impl AsRef<Path>) -> Result<usize> {
    let mut w = ResultWriter::create(path)?;
    let mut count = 0;
    for row in rows {
        w.write(&row)?;
        count += 1;
    }
    w.finish()?;
    Ok(count)
}
