//! Serialising check outputs: versioned JSON reports, CSV tables and a
//! manifest describing every file written.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Number, Value};

use crate::checks::CheckOutput;
use crate::config::{Format, Resolved};
use crate::CliError;

pub const REPORT_SCHEMA: &str = "carnot.report/1";
pub const MANIFEST_SCHEMA: &str = "carnot.manifest/1";
pub const MANIFEST: &str = "manifest.json";
/// Significant digits of every printed float.
pub const DIGITS: usize = 12;

/// `x` rounded to [`DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every float in `v` to [`DIGITS`] significant digits.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0));
            *v = Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}

/// In-memory files, written only once every check has succeeded.
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

pub fn render(outputs: &[CheckOutput], ctx: &Resolved) -> Result<Artifacts, CliError> {
    let formats = &ctx.config.output.formats;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (i, out) in outputs.iter().enumerate() {
        let stem = format!("{i:02}-{}", out.name);
        if formats.contains(&Format::Json) {
            let mut doc = json!({
                "schema": REPORT_SCHEMA,
                "check": out.name,
                "index": i,
                "equation": out.equation,
                "group": ctx.group,
                "norm": carnot::inequality_lab::norm_label(&ctx.norm),
                "surface": ctx.surface.name,
                "quadrature": ctx.config.quadrature,
                "constants": out.constants,
                "violated": out.violated,
                "result": out.result,
            });
            round_floats(&mut doc);
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            text.push('\n');
            let path = format!("{stem}.json");
            entries.push(json!({ "path": path, "check": out.name, "format": "json", "schema": REPORT_SCHEMA }));
            files.push((path, text.into_bytes()));
        }
        if formats.contains(&Format::Csv) {
            for t in &out.tables {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(t.columns.iter().map(|c| c.0)).map_err(io)?;
                for row in &t.rows {
                    let mut row = Value::Array(row.clone());
                    round_floats(&mut row);
                    let cells: Vec<String> = row.as_array().into_iter().flatten().map(csv_cell).collect();
                    w.write_record(&cells).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                let path = format!("{stem}-{}.csv", t.suffix);
                let columns: Vec<Value> = t.columns.iter().map(|(n, d)| json!({ "name": n, "doc": d })).collect();
                entries.push(json!({ "path": path, "check": out.name, "format": "csv", "columns": columns }));
                files.push((path, bytes));
            }
        }
    }
    let mut manifest = Map::new();
    manifest.insert("schema".into(), json!(MANIFEST_SCHEMA));
    manifest.insert("violated".into(), json!(outputs.iter().any(|o| o.violated)));
    manifest.insert("files".into(), Value::Array(entries));
    let mut text = serde_json::to_string_pretty(&Value::Object(manifest)).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    files.push((MANIFEST.to_string(), text.into_bytes()));
    Ok(Artifacts { files })
}

/// Writes all artifacts into `dir`; on failure removes what was written.
pub fn write(artifacts: &Artifacts, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(CliError::Io(format!("{}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_twelve_digits() {
        assert_eq!(round_sig(std::f64::consts::PI), 3.14159265359);
        assert_eq!(round_sig(-1.0 / 3.0e-9), -333333333.333);
        assert_eq!(round_sig(0.0), 0.0);
        let mut v = json!({ "a": [1.0 / 7.0, 3], "b": "x" });
        round_floats(&mut v);
        assert_eq!(v.to_string(), r#"{"a":[0.142857142857,3],"b":"x"}"#);
    }
}
