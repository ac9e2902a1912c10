use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::TaskKind;

use super::Dataset;

#[derive(Debug, Clone)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvTask {
    Classification,
    Regression,
}

#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub target: TargetColumn,
    pub task: CsvTask,
    pub delimiter: u8,
    pub has_header: bool,
}

impl CsvSchema {
    pub fn new(target: TargetColumn, task: CsvTask) -> Self {
        CsvSchema {
            target,
            task,
            delimiter: b',',
            has_header: true,
        }
    }
}

/// Loads a UTF-8 delimited file into a Dataset. Features are parsed as f64;
/// classification targets are mapped to contiguous class ids in sorted label
/// order and one-hot encoded.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(schema.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;

    let headers: Vec<String> = if schema.has_header {
        reader
            .headers()
            .map_err(|e| Error::Data(format!("bad header: {e}")))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect()
    } else {
        Vec::new()
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::CsvRow {
            row: i + 1,
            reason: e.to_string(),
        })?;
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let width = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::CsvRow {
                row: i + 1,
                reason: format!("ragged row: {} fields, expected {width}", r.len()),
            });
        }
    }

    let target_idx = match &schema.target {
        TargetColumn::Index(i) => {
            if *i >= width {
                return Err(Error::Data(format!(
                    "target column index {i} out of range (width {width})"
                )));
            }
            *i
        }
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("target column `{name}` not found")))?,
    };

    let d = width - 1;
    if d == 0 {
        return Err(Error::Data("no feature columns".into()));
    }
    let n = rows.len();
    let mut x = Array2::zeros((n, d));
    for (i, r) in rows.iter().enumerate() {
        let mut col = 0;
        for (j, cell) in r.iter().enumerate() {
            if j == target_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::CsvRow {
                row: i + 1,
                reason: format!("non-numeric feature value `{cell}` in column {j}"),
            })?;
            if !v.is_finite() {
                return Err(Error::CsvRow {
                    row: i + 1,
                    reason: format!("non-finite feature value `{cell}` in column {j}"),
                });
            }
            x[[i, col]] = v;
            col += 1;
        }
    }

    let feature_names = if schema.has_header {
        Some(
            headers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != target_idx)
                .map(|(_, h)| h.clone())
                .collect(),
        )
    } else {
        None
    };

    let mut ds = match schema.task {
        CsvTask::Classification => {
            let mut class_ids: BTreeMap<String, usize> = BTreeMap::new();
            for r in &rows {
                let next = class_ids.len();
                class_ids.entry(r[target_idx].clone()).or_insert(next);
            }
            // contiguous ids in sorted label order
            let names: Vec<String> = class_ids.keys().cloned().collect();
            for (rank, name) in names.iter().enumerate() {
                class_ids.insert(name.clone(), rank);
            }
            let nc = names.len();
            if nc < 2 {
                return Err(Error::Data("classification target has a single class".into()));
            }
            let mut y = Array2::zeros((n, nc));
            for (i, r) in rows.iter().enumerate() {
                y[[i, class_ids[&r[target_idx]]]] = 1.0;
            }
            let mut ds = Dataset::new(x, y, TaskKind::Classification(nc))?;
            ds.class_names = Some(names);
            ds
        }
        CsvTask::Regression => {
            let mut y = Array2::zeros((n, 1));
            for (i, r) in rows.iter().enumerate() {
                let cell = &r[target_idx];
                let v: f64 = cell.parse().map_err(|_| Error::CsvRow {
                    row: i + 1,
                    reason: format!("non-numeric target value `{cell}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::CsvRow {
                        row: i + 1,
                        reason: format!("non-finite target value `{cell}`"),
                    });
                }
                y[[i, 0]] = v;
            }
            Dataset::new(x, y, TaskKind::Regression(1))?
        }
    };
    ds.feature_names = feature_names;
    Ok(ds)
}
