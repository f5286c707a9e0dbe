//! File writers. Every CSV opens with `# key = value` comment lines holding
//! the configuration, seed and version; each run directory also gets a
//! `record.txt`.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::error::{io_error, CliError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `key = value` lines ending with the library version.
pub fn snapshot(config_text: &str) -> String {
    format!("{config_text}version = {VERSION}\n")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

/// CSV with a commented snapshot header. `header` names the columns, so an
/// empty `rows` still yields a header line.
pub fn write_csv<R: Serialize>(path: &Path, snapshot: &str, header: &[&str], rows: &[R]) -> Result<(), CliError> {
    let mut out = Vec::new();
    for line in snapshot.lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let internal = |e: csv::Error| CliError::Internal(e.into());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.serialize(r).map_err(internal)?;
    }
    let out = w.into_inner().map_err(|e| CliError::Internal(anyhow::anyhow!("{e}")))?;
    write_file(path, &out)
}

/// `record.txt`: the snapshot followed by `duration_*` timing lines.
pub fn write_record(dir: &Path, snapshot: &str, timings: &[(&str, Duration)]) -> Result<(), CliError> {
    let mut text = snapshot.to_string();
    for (name, d) in timings {
        text.push_str(&format!("duration_{name}_s = {}\n", d.as_secs_f64()));
    }
    write_file(&dir.join("record.txt"), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: Option<f64>,
    }

    #[test]
    fn csv_has_comment_header_and_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/x.csv");
        write_csv(&path, "seed = 3\n", &["a", "b"], &[Row { a: 1, b: Some(0.5) }, Row { a: 2, b: None }]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "# seed = 3\na,b\n1,0.5\n2,\n");
        write_csv::<Row>(&path, "", &["a", "b"], &[]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n");
    }
}
