//! Aggregated run reports: config echo, verdict list, step statistics.
//! Serialization is deterministic (sorted keys, 17-digit floats) so a
//! fixed config reproduces byte-identical report files.

use std::collections::BTreeMap;
use warpflow::fmt::JsonValue;
use warpflow::verify::{Verdict, VerdictStatus};
use warpflow::Error;

#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub steps: u64,
    pub rejected_steps: u64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    pub trace_files: Vec<String>,
    pub stats: RunStats,
}

impl Report {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        Report { config, verdicts: Vec::new(), trace_files: Vec::new(), stats: RunStats::default() }
    }

    /// Every requested check appears exactly once.
    pub fn push_verdict(&mut self, v: Verdict) -> Result<(), Error> {
        if self.verdicts.iter().any(|x| x.name == v.name) {
            return Err(Error::domain(format!("duplicate check `{}` in report", v.name)));
        }
        self.verdicts.push(v);
        Ok(())
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == VerdictStatus::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == VerdictStatus::Fail)
    }

    pub fn any_inconclusive(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == VerdictStatus::Inconclusive)
    }

    /// Exit code: 0 all pass, 1 any fail, 4 inconclusive-only.
    pub fn exit_code(&self) -> i32 {
        if self.any_fail() {
            1
        } else if self.any_inconclusive() {
            4
        } else {
            0
        }
    }

    pub fn to_json_value(&self) -> JsonValue {
        JsonValue::obj(vec![
            (
                "config",
                JsonValue::Object(
                    self.config
                        .iter()
                        .map(|(k, v)| (k.clone(), JsonValue::Str(v.clone())))
                        .collect(),
                ),
            ),
            ("pass", JsonValue::Bool(self.all_pass())),
            (
                "stats",
                JsonValue::obj(vec![
                    ("rejected_steps", JsonValue::Int(self.stats.rejected_steps as i64)),
                    ("samples", JsonValue::Int(self.stats.samples as i64)),
                    ("steps", JsonValue::Int(self.stats.steps as i64)),
                ]),
            ),
            (
                "trace_files",
                JsonValue::Array(self.trace_files.iter().map(|f| JsonValue::Str(f.clone())).collect()),
            ),
            (
                "verdicts",
                JsonValue::Array(self.verdicts.iter().map(|v| v.to_json_value()).collect()),
            ),
        ])
    }

    /// Deterministic JSON; a report must contain at least one check.
    pub fn emit(&self, path: &std::path::Path) -> Result<(), Error> {
        if self.verdicts.is_empty() {
            return Err(Error::domain("refusing to emit a report with no checks"));
        }
        let mut text = self.to_json_value().to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn serde_to_json_value(v: &serde_json::Value) -> JsonValue {
    match v {
        serde_json::Value::Null => JsonValue::Null,
        serde_json::Value::Bool(b) => JsonValue::Bool(*b),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                JsonValue::Int(i)
            } else {
                JsonValue::Float(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        serde_json::Value::String(s) => JsonValue::Str(s.clone()),
        serde_json::Value::Array(items) => {
            JsonValue::Array(items.iter().map(serde_to_json_value).collect())
        }
        serde_json::Value::Object(map) => JsonValue::Object(
            map.iter().map(|(k, v)| (k.clone(), serde_to_json_value(v))).collect(),
        ),
    }
}

pub fn parse_verdict(v: &serde_json::Value) -> Result<Verdict, Error> {
    let obj = v.as_object().ok_or_else(|| Error::parse("verdict is not an object"))?;
    let name = obj
        .get("name")
        .and_then(|x| x.as_str())
        .ok_or_else(|| Error::parse("verdict missing name"))?;
    let residual = obj
        .get("residual")
        .and_then(|x| x.as_f64())
        .ok_or_else(|| Error::parse("verdict missing residual"))?;
    let tolerance = obj
        .get("tolerance")
        .and_then(|x| x.as_f64())
        .ok_or_else(|| Error::parse("verdict missing tolerance"))?;
    let context = obj.get("context").and_then(|x| x.as_str()).unwrap_or("").to_string();
    let status = match obj.get("status").and_then(|x| x.as_str()) {
        Some("inconclusive") => {
            return Ok(Verdict::inconclusive(name, residual, tolerance, context))
        }
        _ => Verdict::conclusive(name, residual, tolerance, context),
    };
    Ok(status)
}

/// Merge several report files: verdicts concatenate (names must stay
/// unique), traces concatenate, stats add, configs merge with
/// file-qualified keys on collision.
pub fn merge_reports(paths: &[std::path::PathBuf]) -> Result<Report, Error> {
    if paths.is_empty() {
        return Err(Error::parse("report merge needs at least one input"));
    }
    let mut merged = Report::new(BTreeMap::new());
    for path in paths {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::parse(format!("{}: invalid JSON: {e}", path.display())))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse(format!("{}: report is not an object", path.display())))?;
        if let Some(cfg) = obj.get("config").and_then(|c| c.as_object()) {
            for (k, v) in cfg {
                let key = if merged.config.contains_key(k) {
                    format!("{}:{k}", path.display())
                } else {
                    k.clone()
                };
                merged.config.insert(key, v.as_str().unwrap_or("").to_string());
            }
        }
        if let Some(traces) = obj.get("trace_files").and_then(|t| t.as_array()) {
            for t in traces {
                if let Some(s) = t.as_str() {
                    merged.trace_files.push(s.to_string());
                }
            }
        }
        if let Some(stats) = obj.get("stats").and_then(|s| s.as_object()) {
            merged.stats.steps += stats.get("steps").and_then(|x| x.as_i64()).unwrap_or(0) as u64;
            merged.stats.rejected_steps +=
                stats.get("rejected_steps").and_then(|x| x.as_i64()).unwrap_or(0) as u64;
            merged.stats.samples +=
                stats.get("samples").and_then(|x| x.as_i64()).unwrap_or(0) as usize;
        }
        let verdicts = obj
            .get("verdicts")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::parse(format!("{}: report has no verdicts", path.display())))?;
        for v in verdicts {
            let mut verdict = parse_verdict(v)?;
            if merged.verdicts.iter().any(|x| x.name == verdict.name) {
                verdict.name = format!("{}:{}", path.display(), verdict.name);
            }
            merged.verdicts.push(verdict);
        }
    }
    Ok(merged)
}

/// Re-serialize arbitrary parsed JSON deterministically (used by tests
/// and tooling that normalize third-party reports).
pub fn normalize_json(text: &str) -> Result<String, Error> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("invalid JSON: {e}")))?;
    Ok(serde_to_json_value(&value).to_json())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_checks_rejected() {
        let mut r = Report::new(BTreeMap::new());
        r.push_verdict(Verdict::conclusive("a", 1.0, 0.1, "")).unwrap();
        assert!(r.push_verdict(Verdict::conclusive("a", 1.0, 0.1, "")).is_err());
    }

    #[test]
    fn exit_codes() {
        let mut r = Report::new(BTreeMap::new());
        r.push_verdict(Verdict::conclusive("a", 1.0, 0.1, "")).unwrap();
        assert_eq!(r.exit_code(), 0);
        r.push_verdict(Verdict::inconclusive("b", 0.0, 0.1, "")).unwrap();
        assert_eq!(r.exit_code(), 4);
        r.push_verdict(Verdict::conclusive("c", -1.0, 0.1, "")).unwrap();
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn empty_report_refused() {
        let r = Report::new(BTreeMap::new());
        let dir = std::env::temp_dir().join("warpflow-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        assert!(r.emit(&dir.join("r.json")).is_err());
    }
}
