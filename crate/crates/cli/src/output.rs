use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SCHEMA: &str = "oamlab.v1";

/// Shortest round-trip decimal; exponent form for very small or large values.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table with the `oamlab.v1` comment header.
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &Value) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema={SCHEMA}");
        let _ = writeln!(s, "# config={config}");
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// JSON document: `schema`, the resolved `config`, then the payload fields.
pub fn json_document<T: Serialize>(config: &Value, payload: &T) -> Result<String, CliError> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), Value::from(SCHEMA));
    doc.insert("config".into(), config.clone());
    match serde_json::to_value(payload).map_err(|e| CliError::io(e.to_string()))? {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc))
        .map_err(|e| CliError::io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path` through a temporary sibling and a rename, or
/// to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
        Some(p) => write_atomic(p, contents),
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = temp_sibling(path);
    let result = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::io(format!(
            "cannot write {}: {e}",
            path.display()
        )));
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0, 1.3e-9, 6.88, 1e22, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(1.3e-9), "1.3e-9");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn table_header() {
        let mut t = Table::new(["x", "y"]);
        t.push(vec!["1.0".into(), "2.0".into()]);
        let s = t.render(&serde_json::json!({"a": 1}));
        assert_eq!(s, "# schema=oamlab.v1\n# config={\"a\":1}\nx,y\n1.0,2.0\n");
    }
}
