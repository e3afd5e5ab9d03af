use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::Dataset;
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Label in the final column; otherwise the first.
    pub label_last: bool,
    /// Declared class count. Inferred as `max label + 1` (at least 2) when absent.
    pub num_classes: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { has_header: false, label_last: true, num_classes: None }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: CsvOptions) -> Result<Dataset> {
    read_csv(File::open(path)?, options)
}

/// Rows are reported 1-based and count the header line when present.
pub fn read_csv<R: Read>(reader: R, options: CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let offset = usize::from(options.has_header) + 1;
    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + offset;
        let record = record.map_err(|e| Error::Csv { row, detail: e.to_string() })?;
        let cells: Vec<&str> = record.iter().collect();
        if cells.len() < 2 {
            return Err(Error::Csv {
                row,
                detail: format!("need a label and at least one feature, got {} cells", cells.len()),
            });
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Csv { row, detail: format!("expected {w} cells, got {}", cells.len()) })
            }
            _ => {}
        }
        let (label_cell, feature_cells) = if options.label_last {
            (cells[cells.len() - 1], &cells[..cells.len() - 1])
        } else {
            (cells[0], &cells[1..])
        };
        for cell in feature_cells {
            let v: f64 =
                cell.parse().map_err(|_| Error::Csv { row, detail: format!("non-numeric feature {cell:?}") })?;
            if !v.is_finite() {
                return Err(Error::Csv { row, detail: format!("non-finite feature {cell:?}") });
            }
            data.push(v);
        }
        let label: usize = label_cell
            .parse()
            .map_err(|_| Error::Csv { row, detail: format!("label {label_cell:?} is not a nonnegative integer") })?;
        if let Some(c) = options.num_classes {
            if label >= c {
                return Err(Error::Csv { row, detail: format!("label {label} outside [0, {c})") });
            }
        }
        labels.push(label);
    }
    let Some(width) = width else {
        return Err(Error::Csv { row: offset, detail: "no data rows".into() });
    };
    let num_classes = options.num_classes.unwrap_or_else(|| labels.iter().max().map_or(2, |m| (m + 1).max(2)));
    let n = labels.len();
    Dataset::new(Tensor::matrix(n, width - 1, data)?, labels, num_classes)
}
