//! The versioned JSON report and atomic file output.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// One pipeline stage in the report.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
    pub result: Value,
}

pub fn build(command: &str, digest: &str, stages: &[Stage], exit_code: i32) -> Value {
    let stages: Vec<Value> = stages
        .iter()
        .map(|s| json!({ "name": s.name, "seconds": s.seconds, "result": s.result }))
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "allab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_digest": digest,
        "stages": stages,
        "exit_code": exit_code,
    })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, String> {
    obj.get(key).ok_or_else(|| format!("missing `{key}`"))
}

/// Structural check of a parsed report against the schema.
pub fn validate(report: &Value) -> Result<(), String> {
    let obj = report.as_object().ok_or("report is not an object")?;
    let allowed = ["schema_version", "tool", "version", "command", "config_digest", "stages", "exit_code"];
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!("unexpected key `{k}`"));
    }
    if field(obj, "schema_version")?.as_u64() != Some(SCHEMA_VERSION) {
        return Err(format!("schema_version must be {SCHEMA_VERSION}"));
    }
    for key in ["tool", "version", "command"] {
        field(obj, key)?.as_str().ok_or_else(|| format!("`{key}` must be a string"))?;
    }
    let digest = field(obj, "config_digest")?.as_str().ok_or("`config_digest` must be a string")?;
    if digest.len() != 64 || !digest.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err("`config_digest` must be 64 hex digits".into());
    }
    let code = field(obj, "exit_code")?.as_i64().ok_or("`exit_code` must be an integer")?;
    if ![0, 1, 2].contains(&code) {
        return Err(format!("exit_code {code} is not 0, 1 or 2"));
    }
    for (i, s) in field(obj, "stages")?.as_array().ok_or("`stages` must be an array")?.iter().enumerate() {
        let s = s.as_object().ok_or_else(|| format!("stage {i} is not an object"))?;
        field(s, "name")?.as_str().ok_or_else(|| format!("stage {i}: name must be a string"))?;
        let secs = field(s, "seconds")?.as_f64().ok_or_else(|| format!("stage {i}: seconds must be a number"))?;
        if secs < 0.0 {
            return Err(format!("stage {i}: negative time"));
        }
        field(s, "result")?;
    }
    Ok(())
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let stages = vec![Stage {
            name: "check_pair".into(),
            seconds: 0.25,
            result: json!({ "verdict": "anosov_liouville", "f_plus": [2.0, 2.0] }),
        }];
        let r = build("check-pair", &"ab".repeat(32), &stages, 0);
        let text = serde_json::to_string_pretty(&r).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        validate(&back).unwrap();
        assert_eq!(back, r);
        let mut bad = r.clone();
        bad["exit_code"] = json!(7);
        assert!(validate(&bad).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "r.json", b"one").unwrap();
        write_atomic(dir.path(), "r.json", b"two").unwrap();
        assert_eq!(std::fs::read(dir.path().join("r.json")).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
