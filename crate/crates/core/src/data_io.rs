//! Loss-data ingestion and the comonotonic and independent sums of two
//! empirical laws.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{EmpiricalDistribution, LossDistribution};
use crate::error::{Error, Result};
use crate::rng::{fill_rows, RngStream};

/// A CSV column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonPositive {
    /// Fail on the first value `≤ 0`.
    #[default]
    Reject,
    /// Skip values `≤ 0` and count them.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub delimiter: char,
    pub has_header: bool,
    /// Every value is multiplied by this factor after parsing.
    pub scale: f64,
    pub nonpositive: NonPositive,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: ',',
            has_header: true,
            scale: 1.0,
            nonpositive: NonPositive::Reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadedLosses {
    pub values: Vec<f64>,
    pub rows: usize,
    pub dropped: usize,
}

/// Reads one numeric column of a CSV file.
pub fn load_losses(path: impl AsRef<Path>, column: &Column, options: &LoadOptions) -> Result<LoadedLosses> {
    let file = File::open(path.as_ref())?;
    read_losses(file, column, options)
}

/// As [`load_losses`], from any reader.
pub fn read_losses<R: Read>(reader: R, column: &Column, options: &LoadOptions) -> Result<LoadedLosses> {
    if !options.delimiter.is_ascii() {
        return Err(Error::param("delimiter", "must be a single ASCII character"));
    }
    if !(options.scale > 0.0 && options.scale.is_finite()) {
        return Err(Error::param("scale", "must be positive"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter as u8)
        .has_headers(options.has_header)
        .flexible(true)
        .from_reader(reader);
    let idx = match column {
        Column::Index(i) => *i,
        Column::Name(name) => {
            if !options.has_header {
                return Err(Error::param("column", "a column name needs a header row"));
            }
            rdr.headers()?
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::param("column", format!("no column named `{name}`")))?
        }
    };
    let mut out = LoadedLosses {
        values: Vec::new(),
        rows: 0,
        dropped: 0,
    };
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = record.get(idx).ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("missing column {idx}"),
        })?;
        let v: f64 = cell.trim().parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("`{cell}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::MalformedRow {
                line,
                reason: format!("`{cell}` is not finite"),
            });
        }
        out.rows += 1;
        if v <= 0.0 {
            match options.nonpositive {
                NonPositive::Drop => {
                    out.dropped += 1;
                    continue;
                }
                NonPositive::Reject => {
                    return Err(Error::MalformedRow {
                        line,
                        reason: format!("loss {v} is not positive"),
                    })
                }
            }
        }
        out.values.push(v * options.scale);
    }
    if out.values.is_empty() {
        return Err(Error::Validation("no losses were read".into()));
    }
    Ok(out)
}

/// The law whose quantile function is the sum of the two empirical left
/// quantile functions.
pub fn comonotonic_sum(f1: &EmpiricalDistribution, f2: &EmpiricalDistribution) -> Result<LossDistribution> {
    LossDistribution::comonotone_sum(vec![
        LossDistribution::empirical(f1.sorted().to_vec())?,
        LossDistribution::empirical(f2.sorted().to_vec())?,
    ])
}

/// `n_out` draws of `Y₁ + Y₂`, each term resampled with replacement from its
/// own empirical law.
pub fn independent_sum(
    f1: &EmpiricalDistribution,
    f2: &EmpiricalDistribution,
    n_out: usize,
    stream: RngStream,
) -> Vec<f64> {
    let (a, b) = (f1.sorted(), f2.sorted());
    fill_rows(n_out, |rows, out| {
        let mut g = stream.row(rows.start as u64, 2);
        for o in out {
            let i = g.index(a.len());
            let j = g.index(b.len());
            *o = a[i] + b[j];
        }
    })
}
