use std::io::Write;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned `key  value` lines.
    Table,
    /// Canonical JSON, one document.
    Canonical,
}

/// Command result: a structured document plus the exit code.
pub struct Outcome {
    pub body: Value,
    pub code: u8,
}

impl Outcome {
    pub fn ok(body: Value) -> Self {
        Outcome { body, code: 0 }
    }

    pub fn with_code(body: Value, code: u8) -> Self {
        Outcome { body, code }
    }

    pub fn print(&self, format: Format) -> anyhow::Result<()> {
        let mut out = std::io::stdout().lock();
        match format {
            Format::Canonical => {
                out.write_all(&kld_core::canonical::to_canonical_bytes(&self.body)?)?;
                out.write_all(b"\n")?;
            }
            Format::Table => out.write_all(render_table(&self.body).as_bytes())?,
        }
        Ok(())
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Top-level keys become rows; nested objects are flattened with dotted keys.
pub fn render_table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            rows.push((prefix.to_string(), items.iter().map(scalar).collect::<Vec<_>>().join(", ")));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}
