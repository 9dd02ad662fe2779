use crate::args::{Format, OutputArgs};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn meta_line() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("ironface {} generated at unix time {secs}", env!("CARGO_PKG_VERSION"))
}

/// Renders rows as CSV (header from the field names) or as a JSON object
/// `{"meta": ..., "rows": [...]}`.
pub fn render<T: Serialize>(rows: &[T], out: &OutputArgs) -> Result<Vec<u8>, OutputError> {
    match out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            if !out.no_meta {
                buf.extend_from_slice(format!("# {}\n", meta_line()).as_bytes());
            }
            let mut w = csv::Writer::from_writer(buf);
            for r in rows {
                w.serialize(r).map_err(|e| OutputError::Serialize(e.to_string()))?;
            }
            w.into_inner().map_err(|e| OutputError::Serialize(e.to_string()))
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            if !out.no_meta {
                obj.insert("meta".into(), serde_json::Value::String(meta_line()));
            }
            let rows = serde_json::to_value(rows).map_err(|e| OutputError::Serialize(e.to_string()))?;
            obj.insert("rows".into(), rows);
            let mut text = serde_json::to_vec_pretty(&obj).map_err(|e| OutputError::Serialize(e.to_string()))?;
            text.push(b'\n');
            Ok(text)
        }
    }
}

/// Writes through a temporary file in the target directory and renames it,
/// so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let io = |source| OutputError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit<T: Serialize>(rows: &[T], out: &OutputArgs) -> Result<(), OutputError> {
    let bytes = render(rows, out)?;
    match &out.output {
        Some(p) => write_atomic(p, &bytes),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|source| OutputError::Io { path: "<stdout>".into(), source }),
    }
}
