//! Delimiter-separated tabular loader for datasets distributed as CSV
//! (feature columns plus one categorical label column). A header row is
//! required; labels are mapped to class indices in first-appearance order.

use super::Dataset;
use crate::error::{Error, Result};
use crate::math::DenseMatrix;
use std::fs;
use std::path::Path;

/// Load one or more CSV files (same header) as a single dataset.
pub fn load_csv(paths: &[impl AsRef<Path>], label_column: &str, delimiter: char) -> Result<Dataset> {
    if paths.is_empty() {
        return Err(Error::usage("load_csv: no files given"));
    }
    let mut features: Vec<f64> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut feature_count: Option<usize> = None;

    for path in paths {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format(format!("{}: empty file", path.display())))?;
        let columns: Vec<&str> = header.split(delimiter).map(str::trim).collect();
        let label_idx = columns
            .iter()
            .position(|c| *c == label_column)
            .ok_or_else(|| {
                Error::config(format!(
                    "{}: label column {label_column:?} not found in header",
                    path.display()
                ))
            })?;
        let n = columns.len() - 1;
        match feature_count {
            None => feature_count = Some(n),
            Some(prev) if prev != n => {
                return Err(Error::format(format!(
                    "{}: {n} feature columns, expected {prev}",
                    path.display()
                )))
            }
            _ => {}
        }

        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(delimiter).map(str::trim).collect();
            if cells.len() != columns.len() {
                return Err(Error::format(format!(
                    "{}: row {} has {} cells, expected {}",
                    path.display(),
                    line_no + 1,
                    cells.len(),
                    columns.len()
                )));
            }
            for (i, cell) in cells.iter().enumerate() {
                if i == label_idx {
                    let name = cell.to_string();
                    let class = match label_names.iter().position(|l| *l == name) {
                        Some(k) => k,
                        None => {
                            label_names.push(name);
                            label_names.len() - 1
                        }
                    };
                    labels.push(class);
                } else {
                    let v: f64 = cell.parse().map_err(|_| {
                        Error::format(format!(
                            "{}: row {}, column {:?}: {cell:?} is not numeric",
                            path.display(),
                            line_no + 1,
                            columns[i]
                        ))
                    })?;
                    features.push(v);
                }
            }
        }
    }

    let n = feature_count.unwrap_or(0);
    if labels.is_empty() {
        return Err(Error::format("load_csv: no data rows"));
    }
    let x = DenseMatrix::from_vec(labels.len(), n, features)?;
    let name = paths[0]
        .as_ref()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    Dataset::new(name, x, labels, label_names.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn labels_in_first_appearance_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "f1,f2,class\n1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n");
        let d = load_csv(&[p], "class", ',').unwrap();
        assert_eq!(d.class_count(), 2);
        assert_eq!(d.feature_count(), 2);
        assert_eq!(d.labels(), &[0, 1, 0]); // b first, then a
        assert_eq!(d.input(1), &[3.0, 4.0]);
    }

    #[test]
    fn missing_label_column_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "f1,f2\n1,2\n");
        let err = load_csv(&[p], "class", ',').unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "f1,f2,class\n1.0,2.0,a\n3.0,b\n");
        let err = load_csv(&[p], "class", ',').unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn non_numeric_feature_cell_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "f1,class\nhello,a\n");
        let err = load_csv(&[p], "class", ',').unwrap_err();
        assert!(err.to_string().contains("not numeric"), "{err}");
    }

    #[test]
    fn multiple_files_pool_rows() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.csv", "f1,class\n1.0,x\n");
        let b = write(dir.path(), "b.csv", "f1,class\n2.0,y\n");
        let d = load_csv(&[a, b], "class", ',').unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.class_count(), 2);
    }
}
