//! The JSON report every subcommand prints, and its structural validator.

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "1";

pub const COMMANDS: [&str; 6] = ["count", "expsum", "weyl", "invariants", "predict", "corpus"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    AssertionFailed,
    PrecisionFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::AssertionFailed => "assertion_failed",
            Status::PrecisionFailure => "precision_failure",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::AssertionFailed => 2,
            Status::PrecisionFailure => 3,
        }
    }
}

pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub result: Map<String, Value>,
    /// One entry per key of `result`: what the number means and how it was obtained.
    pub provenance: Map<String, Value>,
    pub status: Status,
    pub error: Option<String>,
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn new(command: &'static str, config: Map<String, Value>) -> Report {
        Report {
            command,
            config,
            result: Map::new(),
            provenance: Map::new(),
            status: Status::Ok,
            error: None,
            elapsed_ms: None,
        }
    }

    /// Adds a result entry together with its provenance.
    pub fn put(&mut self, key: &str, value: Value, provenance: &str) {
        self.result.insert(key.to_string(), value);
        self.provenance.insert(key.to_string(), Value::String(provenance.to_string()));
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "formsys",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "status": self.status.as_str(),
            "config": self.config,
            "result": self.result,
            "provenance": self.provenance,
        });
        if let Some(e) = &self.error {
            v["error"] = Value::String(e.clone());
        }
        if let Some(ms) = self.elapsed_ms {
            v["timing"] = json!({ "elapsed_ms": ms });
        }
        v
    }
}

fn need<'a>(v: &'a Value, key: &str) -> Result<&'a Value, String> {
    v.get(key).ok_or_else(|| format!("missing `{key}`"))
}

fn need_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, String> {
    need(v, key)?.as_str().ok_or_else(|| format!("`{key}` must be a string"))
}

/// Checks the same constraints as `schema/report.schema.json`, plus the rule that
/// every result entry has a provenance string.
pub fn validate(v: &Value) -> Result<(), String> {
    let top = v.as_object().ok_or("report must be an object")?;
    const ALLOWED: [&str; 10] =
        ["schema_version", "tool", "version", "command", "status", "config", "result", "provenance", "error", "timing"];
    if let Some(k) = top.keys().find(|k| !ALLOWED.contains(&k.as_str())) {
        return Err(format!("unexpected key `{k}`"));
    }
    if need_str(v, "schema_version")? != SCHEMA_VERSION {
        return Err("wrong schema_version".into());
    }
    if need_str(v, "tool")? != "formsys" {
        return Err("wrong tool".into());
    }
    need_str(v, "version")?;
    let command = need_str(v, "command")?;
    if !COMMANDS.contains(&command) {
        return Err(format!("unknown command `{command}`"));
    }
    let status = need_str(v, "status")?;
    if !["ok", "assertion_failed", "precision_failure"].contains(&status) {
        return Err(format!("unknown status `{status}`"));
    }
    need(v, "config")?.as_object().ok_or("`config` must be an object")?;
    let result = need(v, "result")?.as_object().ok_or("`result` must be an object")?;
    let prov = need(v, "provenance")?.as_object().ok_or("`provenance` must be an object")?;
    if prov.is_empty() {
        return Err("`provenance` is empty".into());
    }
    for (k, p) in prov {
        if p.as_str().is_none_or(str::is_empty) {
            return Err(format!("provenance `{k}` must be a non-empty string"));
        }
    }
    if let Some(k) = result.keys().find(|k| !prov.contains_key(*k)) {
        return Err(format!("result `{k}` has no provenance"));
    }
    let has_error = v.get("error").is_some_and(Value::is_string);
    if (status == "precision_failure") != has_error || (!has_error && v.get("error").is_some()) {
        return Err("`error` must be a string exactly when the status is precision_failure".into());
    }
    if let Some(t) = v.get("timing") {
        if !t.get("elapsed_ms").is_some_and(Value::is_number) {
            return Err("`timing.elapsed_ms` must be a number".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("count", Map::new());
        r.put("counts", json!([1]), "number of zeros");
        r
    }

    #[test]
    fn built_report_validates() {
        assert_eq!(validate(&sample().to_json()), Ok(()));
    }

    #[test]
    fn missing_provenance_rejected() {
        let mut r = sample();
        r.result.insert("extra".into(), json!(2));
        assert!(validate(&r.to_json()).unwrap_err().contains("extra"));
    }

    #[test]
    fn empty_provenance_rejected() {
        let r = Report::new("count", Map::new());
        assert!(validate(&r.to_json()).is_err());
    }

    #[test]
    fn precision_failure_needs_error() {
        let mut r = sample();
        r.status = Status::PrecisionFailure;
        assert!(validate(&r.to_json()).is_err());
        r.error = Some("undecided".into());
        assert_eq!(validate(&r.to_json()), Ok(()));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Ok.exit_code(), 0);
        assert_eq!(Status::AssertionFailed.exit_code(), 2);
        assert_eq!(Status::PrecisionFailure.exit_code(), 3);
    }
}
