//! CSV and JSON plumbing.
//!
//! Data files hold one column per series and one row per time point, with an
//! optional header row of series names. Lines starting with `#` are comments;
//! generated files use the first one to carry their manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use bernoulli_detector::TimeSeriesMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::report::RunManifest;

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(CliError::io(path))
}

pub fn parse_matrix(bytes: &[u8]) -> CliResult<TimeSeriesMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            names = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        let width = names.as_ref().map(Vec::len).or((!columns.is_empty()).then_some(columns.len()));
        if let Some(w) = width {
            if record.len() != w {
                return Err(CliError::Data(format!(
                    "line {line}: expected {w} columns, found {}",
                    record.len()
                )));
            }
        }
        if columns.is_empty() {
            columns = vec![Vec::new(); record.len()];
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("line {line}, column {}: cannot parse {field:?} as a number", c + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("line {line}, column {}: non-finite value {field}", c + 1)));
            }
            columns[c].push(v);
        }
    }
    if columns.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Ok(TimeSeriesMatrix::new(columns, names)?)
}

/// Writes `x` as CSV with the manifest on a leading comment line.
pub fn write_matrix<W: Write>(mut out: W, x: &TimeSeriesMatrix, manifest: &RunManifest) -> CliResult<()> {
    writeln!(out, "# {}", serde_json::to_string(manifest)?)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(x.names())?;
    for t in 0..x.len() {
        writer.write_record(x.rows().iter().map(|row| row[t].to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(CliError::io(p)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let with = parse_matrix(b"a,b\n1,2\n3,4\n5,6\n7,8\n").unwrap();
        assert_eq!(with.names(), ["a", "b"]);
        assert_eq!(with.row(1), [2.0, 4.0, 6.0, 8.0]);
        let without = parse_matrix(b"1\n2\n3\n4\n").unwrap();
        assert_eq!(without.names(), ["s1"]);
    }

    #[test]
    fn comments_are_skipped() {
        let x = parse_matrix(b"# made by hand\nv\n1\n2\n3\n4\n").unwrap();
        assert_eq!(x.len(), 4);
    }

    #[test]
    fn errors_name_the_position() {
        let e = parse_matrix(b"1,2\n3,x\n5,6\n7,8\n").unwrap_err();
        assert!(e.to_string().contains("line 2, column 2"), "{e}");
        let e = parse_matrix(b"1,2\n3\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_matrix(b"1\nNaN\n3\n4\n").unwrap_err();
        assert!(e.to_string().contains("non-finite"), "{e}");
        assert_eq!(e.exit_code(), 3);
        assert!(parse_matrix(b"").is_err());
    }
}
