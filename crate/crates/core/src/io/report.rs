//! StatReport: the JSON result document plus its text rendering.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Significant digits kept for every float in a serialized report.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(name: &str, data: &[u8]) -> Self {
        Self { name: name.to_string(), bytes: data.len(), sha256: sha256_hex(data) }
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub options: Value,
    pub results: Map<String, Value>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl StatReport {
    pub fn new(command: &str, options: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: Vec::new(),
            options,
            results: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn add_input(&mut self, name: &str, data: &[u8]) {
        self.inputs.push(InputDigest::of(name, data));
    }

    pub fn set<T: Serialize>(&mut self, block: &str, value: &T) {
        let v = serde_json::to_value(value).expect("result serializes");
        self.results.insert(block.to_string(), v);
    }

    /// Pretty JSON with floats rounded to [`REPORT_DIGITS`] significant digits.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v, REPORT_DIGITS);
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut v = serde_json::to_value(&self.results).expect("report serializes");
        round_floats(&mut v, REPORT_DIGITS);
        let mut out = format!("{} {} {}\n", self.tool, self.tool_version, self.command);
        for i in &self.inputs {
            out.push_str(&format!("input {} ({} bytes) sha256 {}\n", i.name, i.bytes, i.sha256));
        }
        out.push_str("options:\n");
        render(&self.options, 1, &mut out);
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str("results:\n");
        render(&v, 1, &mut out);
        out
    }
}

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Rounds every non-integer number in `v` in place.
pub fn round_floats(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().unwrap_or_default(), digits);
            *v = serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(a) => a.iter_mut().for_each(|x| round_floats(x, digits)),
        Value::Object(o) => o.values_mut().for_each(|x| round_floats(x, digits)),
        _ => {}
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render(x, depth + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}
