use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// What every subcommand prints. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    /// False when `result` holds enclosures rather than exact values.
    pub exact: bool,
    pub result: Value,
    pub timing_us: u64,
}

/// SHA-256 over every input text, in the order the command read them.
#[derive(Default)]
pub struct InputDigest {
    hasher: Sha256,
}

impl InputDigest {
    pub fn add(&mut self, label: &str, text: &str) {
        self.hasher.update(label.as_bytes());
        self.hasher.update([0]);
        self.hasher.update(text.as_bytes());
        self.hasher.update([0]);
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "inputs-digest: {}", self.inputs_digest);
        let _ = writeln!(out, "exact: {}", self.exact);
        out.push_str("result:");
        render(&mut out, &self.result, 1);
        let _ = writeln!(out, "timing: {}us", self.timing_us);
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.contains('\n') => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            Some(format!("[{}]", items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

/// Indented `key: value` lines; multi-line strings become indented blocks.
fn render(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    if let Some(s) = scalar(v) {
        let _ = writeln!(out, " {s}");
        return;
    }
    out.push('\n');
    match v {
        Value::String(s) => {
            for line in s.lines() {
                let _ = writeln!(out, "{pad}{line}");
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                let _ = write!(out, "{pad}{k}:");
                render(out, item, depth + 1);
            }
        }
        Value::Array(items) => {
            for item in items {
                let _ = write!(out, "{pad}-");
                render(out, item, depth + 1);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_layout() {
        let r = Report {
            command: "theta-demo --q 1/4".into(),
            inputs_digest: "00".into(),
            exact: false,
            result: json!({"enclosure": {"lo": "1/2", "hi": "1/2"}, "tags": ["a", "b"]}),
            timing_us: 7,
        };
        assert_eq!(
            r.to_text(),
            "command: theta-demo --q 1/4\ninputs-digest: 00\nexact: false\nresult:\n  enclosure:\n    lo: 1/2\n    hi: 1/2\n  tags: [a, b]\ntiming: 7us\n"
        );
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
