//! Numeric CSV tables: one header row, `\n` line endings, floats in
//! shortest round-trip form.

use std::io::{self, Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NotANumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("table has no header")]
    NoHeader,
    #[error("table has no rows")]
    NoRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}

/// `prefix_000`, `prefix_001`, ...
pub fn sample_columns(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (0..count).map(move |k| format!("{prefix}_{k:03}"))
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    /// Builds a table from columns of equal length.
    pub fn from_columns(header: Vec<String>, columns: &[&[f64]]) -> Self {
        let len = columns.first().map_or(0, |c| c.len());
        debug_assert!(columns.iter().all(|c| c.len() == len));
        let rows = (0..len)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        Self { header, rows }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn column_at(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut buf = String::new();
        buf.push_str(&self.header.join(","));
        buf.push('\n');
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    buf.push(',');
                }
                buf.push_str(&fmt_float(*v));
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("csv output is ASCII")
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(TableError::NoHeader);
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(j, field)| {
                    field.parse::<f64>().map_err(|_| TableError::NotANumber {
                        row: i + 1,
                        column: header[j].clone(),
                        value: field.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(TableError::NoRows);
        }
        Ok(Self { header, rows })
    }
}
