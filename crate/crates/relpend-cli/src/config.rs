//! Strict run configuration: line-oriented `key = value` text validated
//! against the schema of the selected command. Unknown keys, duplicates,
//! out-of-range values, and missing requirements are all collected and
//! reported together; a silent typo in a tolerance name must never pass.

use std::collections::HashMap;
use std::path::PathBuf;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Float,
    Int,
    UInt,
    Str,
    FloatList,
}

/// Declaration of one command parameter.
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: ParamKind,
    pub required: bool,
    /// Rendered default, absent for required parameters.
    pub default: Option<&'static str>,
    /// Inclusive numeric range where applicable.
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub help: &'static str,
}

impl ParamSpec {
    pub const fn new(key: &'static str, kind: ParamKind, help: &'static str) -> Self {
        ParamSpec { key, kind, required: false, default: None, min: None, max: None, help }
    }

    pub const fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub const fn default(mut self, value: &'static str) -> Self {
        self.default = Some(value);
        self
    }

    pub const fn range(mut self, min: f64, max: f64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    pub fn describe(&self) -> String {
        let mut out = format!("{} ({:?}", self.key, self.kind);
        if let Some(d) = self.default {
            out.push_str(&format!(", default {d}"));
        }
        if self.required {
            out.push_str(", required");
        }
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            out.push_str(&format!(", range [{lo}, {hi}]"));
        }
        out.push_str(&format!(") — {}", self.help));
        out
    }
}

/// The local-error tolerance parameter shared by the commands.
pub const fn tol_param(default: &'static str) -> ParamSpec {
    ParamSpec::new("tol", ParamKind::Float, "local error tolerance of the integrations")
        .default(default)
        .range(1e-14, 1e-3)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    UInt(u64),
    Str(String),
    FloatList(Vec<f64>),
}

/// A fully validated run request.
pub struct RunConfig {
    pub command: String,
    pub model_path: PathBuf,
    values: HashMap<&'static str, Value>,
}

impl RunConfig {
    pub fn f64(&self, key: &str) -> f64 {
        match &self.values[key] {
            Value::Float(x) => *x,
            other => panic!("parameter {key} is not a float: {other:?}"),
        }
    }

    pub fn u64(&self, key: &str) -> u64 {
        match &self.values[key] {
            Value::UInt(x) => *x,
            other => panic!("parameter {key} is not an unsigned integer: {other:?}"),
        }
    }

    pub fn i64(&self, key: &str) -> i64 {
        match &self.values[key] {
            Value::Int(x) => *x,
            other => panic!("parameter {key} is not an integer: {other:?}"),
        }
    }

    pub fn str(&self, key: &str) -> &str {
        match &self.values[key] {
            Value::Str(s) => s,
            other => panic!("parameter {key} is not a string: {other:?}"),
        }
    }

    pub fn f64_list(&self, key: &str) -> &[f64] {
        match &self.values[key] {
            Value::FloatList(v) => v,
            other => panic!("parameter {key} is not a float list: {other:?}"),
        }
    }
}

fn parse_value(spec: &ParamSpec, raw: &str, line_no: Option<usize>, issues: &mut Vec<String>) -> Option<Value> {
    let at = |msg: String| match line_no {
        Some(n) => format!("line {n}: {msg}"),
        None => msg,
    };
    let check_range = |x: f64, issues: &mut Vec<String>| -> bool {
        if let (Some(lo), Some(hi)) = (spec.min, spec.max) {
            if !(x >= lo && x <= hi) {
                issues.push(at(format!("{} = {raw} outside the admissible range [{lo}, {hi}]", spec.key)));
                return false;
            }
        }
        true
    };
    match spec.kind {
        ParamKind::Float => match raw.parse::<f64>() {
            Ok(x) if x.is_finite() => check_range(x, issues).then_some(Value::Float(x)),
            _ => {
                issues.push(at(format!("{}: expected a finite number, got {raw:?}", spec.key)));
                None
            }
        },
        ParamKind::Int => match raw.parse::<i64>() {
            Ok(x) => check_range(x as f64, issues).then_some(Value::Int(x)),
            _ => {
                issues.push(at(format!("{}: expected an integer, got {raw:?}", spec.key)));
                None
            }
        },
        ParamKind::UInt => match raw.parse::<u64>() {
            Ok(x) => check_range(x as f64, issues).then_some(Value::UInt(x)),
            _ => {
                issues.push(at(format!("{}: expected a nonnegative integer, got {raw:?}", spec.key)));
                None
            }
        },
        ParamKind::Str => Some(Value::Str(raw.to_string())),
        ParamKind::FloatList => {
            let mut list = Vec::new();
            for part in raw.split(',') {
                match part.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() && check_range(x, issues) => list.push(x),
                    Ok(_) => return None,
                    Err(_) => {
                        issues.push(at(format!("{}: malformed list entry {part:?}", spec.key)));
                        return None;
                    }
                }
            }
            if list.is_empty() {
                issues.push(at(format!("{}: the list must not be empty", spec.key)));
                return None;
            }
            Some(Value::FloatList(list))
        }
    }
}

/// Parse and validate a config file against a command schema. The command is
/// `override_command` when the CLI named one, otherwise the file's `command`
/// key. Returns every violation found.
pub fn parse_config(
    text: &str,
    override_command: Option<&str>,
    schema_of: impl Fn(&str) -> Option<&'static [ParamSpec]>,
) -> Result<RunConfig, CliError> {
    let mut issues = Vec::new();
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(format!("line {line_no}: expected 'key = value', got {line:?}"));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if let Some(first) = seen.get(&key) {
            issues.push(format!("line {line_no}: duplicate key '{key}' (first set on line {first})"));
            continue;
        }
        seen.insert(key.clone(), line_no);
        entries.push((line_no, key, value));
    }

    let take = |key: &str, entries: &mut Vec<(usize, String, String)>| -> Option<(usize, String)> {
        entries
            .iter()
            .position(|(_, k, _)| k == key)
            .map(|i| {
                let (n, _, v) = entries.remove(i);
                (n, v)
            })
    };

    let file_command = take("command", &mut entries);
    let command = match override_command {
        Some(name) => {
            if let Some((n, ref file_cmd)) = file_command {
                if file_cmd != name {
                    issues.push(format!(
                        "line {n}: config names command '{file_cmd}' but the command line asked for '{name}'"
                    ));
                }
            }
            name.to_string()
        }
        None => match file_command {
            Some((_, cmd)) => cmd,
            None => {
                issues.push("no command given: pass one on the command line or set 'command = <name>'".into());
                String::new()
            }
        },
    };

    let schema = if command.is_empty() {
        None
    } else {
        let s = schema_of(&command);
        if s.is_none() {
            issues.push(format!("unknown command '{command}'"));
        }
        s
    };

    let model_path = match take("model", &mut entries) {
        Some((_, path)) => PathBuf::from(path),
        None => {
            issues.push("missing required key 'model' (path to the model file)".into());
            PathBuf::new()
        }
    };

    let mut values = HashMap::new();
    if let Some(schema) = schema {
        for (line_no, key, raw) in &entries {
            match schema.iter().find(|p| p.key == *key) {
                Some(spec) => {
                    if let Some(v) = parse_value(spec, raw, Some(*line_no), &mut issues) {
                        values.insert(spec.key, v);
                    }
                }
                None => issues.push(format!("line {line_no}: unknown key '{key}' for command '{command}'")),
            }
        }
        for spec in schema {
            if values.contains_key(spec.key) {
                continue;
            }
            if let Some(default) = spec.default {
                if let Some(v) = parse_value(spec, default, None, &mut issues) {
                    values.insert(spec.key, v);
                }
            } else if spec.required {
                issues.push(format!("missing required key '{}' for command '{command}'", spec.key));
            }
        }
    }

    if !issues.is_empty() {
        return Err(CliError::Config(issues));
    }
    Ok(RunConfig { command, model_path, values })
}
