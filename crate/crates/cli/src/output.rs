//! Run directories and atomically written CSV / JSON-lines outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use activehne_core::alloop::{AggregateRow, IterationRecord};
use activehne_core::AuditRecord;

use crate::error::CliError;

/// Creates `<parent>/<UTC timestamp>-<label>`, adding `-1`, `-2`, … if that
/// name is taken.
pub fn create_run_dir(parent: &Path, label: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(parent).map_err(|e| CliError::output(parent, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{stamp}-{label}");
    for n in 0.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::output(&dir, e)),
        }
    }
    unreachable!()
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::output(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::output(path, e))?;
    tmp.persist(path).map_err(|e| CliError::output(path, e.error))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const RESULTS_HEADER: [&str; 5] = ["iteration", "num_labeled", "test_accuracy", "train_loss", "seconds"];
pub const AGGREGATE_HEADER: [&str; 3] = ["iteration", "mean_accuracy", "std_accuracy"];

pub fn write_results(path: &Path, records: &[IterationRecord]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                r.num_labeled.to_string(),
                r.test_accuracy.to_string(),
                opt(r.train_loss),
                opt(r.seconds),
            ]
        })
        .collect();
    write_csv(path, &RESULTS_HEADER, &rows)
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|a| {
            vec![
                a.iteration.to_string(),
                a.mean_accuracy.to_string(),
                a.std_accuracy.to_string(),
            ]
        })
        .collect();
    write_csv(path, &AGGREGATE_HEADER, &rows)
}

pub fn write_audit(path: &Path, records: &[AuditRecord]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    AuditRecord::write_jsonl(records, &mut buf)?;
    write_atomic(path, &buf)
}

/// File names for run `i` of a repeated experiment; run 0 gets the plain names.
pub fn per_run_names(i: usize) -> (String, String) {
    if i == 0 {
        ("results.csv".into(), "audit.jsonl".into())
    } else {
        (format!("results_run{i}.csv"), format!("audit_run{i}.jsonl"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_csv(&p, &["x", "y"], &[vec!["1".into(), "".into()]]).unwrap();
        write_csv(&p, &["x", "y"], &[vec!["2".into(), "0.5".into()]]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x,y\n2,0.5\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1, "no temp files left");
    }

    #[test]
    fn run_dirs_do_not_collide() {
        let dir = tempfile::tempdir().unwrap();
        let a = create_run_dir(dir.path(), "run").unwrap();
        let b = create_run_dir(dir.path(), "run").unwrap();
        assert_ne!(a, b);
        assert!(a.is_dir() && b.is_dir());
    }
}
