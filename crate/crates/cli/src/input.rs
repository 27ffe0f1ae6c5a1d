//! CSV ingestion: one observation per row, optional header row.

use std::fs::File;
use std::io::{self, Read};

use oja_core::DataMatrix64;

use crate::CliError;

/// Parsed table with an optional header.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
}

fn is_number(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok()
}

pub fn read_table(path: &str) -> Result<Table, CliError> {
    let mut text = String::new();
    let res = if path == "-" {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    };
    res.map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("CSV error: {e}")))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let header = match rows.first() {
        Some(first) if first.iter().any(|f| !is_number(f)) => Some(rows.remove(0)),
        _ => None,
    };
    if rows.is_empty() {
        return Err(CliError::Usage("input has no data rows".into()));
    }
    Ok(Table { header, rows })
}

impl Table {
    /// Index of a named column, or of a 1-based position when there is no header.
    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        if let Some(h) = &self.header {
            if let Some(i) = h.iter().position(|c| c == name) {
                return Ok(i);
            }
        }
        match name.parse::<usize>() {
            Ok(i) if i >= 1 && i <= self.rows[0].len() => Ok(i - 1),
            _ => Err(CliError::Usage(format!("no column named '{name}'"))),
        }
    }

    /// Numeric data from every column except `skip`.
    pub fn data(&self, skip: Option<usize>) -> Result<DataMatrix64, CliError> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let mut v = Vec::with_capacity(row.len());
            for (c, f) in row.iter().enumerate() {
                if Some(c) == skip {
                    continue;
                }
                if f.is_empty() || f.eq_ignore_ascii_case("na") {
                    return Err(CliError::Usage(format!("missing value in row {}, column {}", r + 1, c + 1)));
                }
                let x: f64 = f
                    .parse()
                    .map_err(|_| CliError::Usage(format!("non-numeric value '{f}' in row {}, column {}", r + 1, c + 1)))?;
                if !x.is_finite() {
                    return Err(CliError::Usage(format!("non-finite value in row {}, column {}", r + 1, c + 1)));
                }
                v.push(x);
            }
            out.push(v);
        }
        Ok(DataMatrix64::new(out)?)
    }

    pub fn labels(&self, col: usize) -> Vec<String> {
        self.rows.iter().map(|r| r[col].clone()).collect()
    }
}
