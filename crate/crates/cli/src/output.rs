use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SCHEMA: &str = "freecorr/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Result of one command: a JSON document and a flat table of the same data.
pub struct Output {
    pub command: String,
    pub job: Value,
    pub result: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// `Some(false)` when an acceptance check inside the command failed.
    pub pass: Option<bool>,
}

impl Output {
    pub fn new(command: &str, job: Value, result: impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            job,
            result: serde_json::to_value(result)?,
            header: Vec::new(),
            rows: Vec::new(),
            pass: None,
        })
    }

    pub fn table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        self.header = header.iter().map(|s| s.to_string()).collect();
        self.rows = rows;
        self
    }

    pub fn json(&self) -> Result<String> {
        let mut doc = Map::new();
        doc.insert("schema".into(), Value::String(SCHEMA.into()));
        doc.insert("command".into(), Value::String(self.command.clone()));
        doc.insert("job".into(), self.job.clone());
        if let Some(p) = self.pass {
            doc.insert("pass".into(), Value::Bool(p));
        }
        doc.insert("result".into(), self.result.clone());
        let mut s = serde_json::to_string_pretty(&fix_floats(Value::Object(doc)))?;
        s.push('\n');
        Ok(s)
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    pub fn emit(&self, format: Format, quiet: bool, out_dir: Option<&Path>) -> Result<()> {
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{}.json", self.command)), self.json()?)?;
            fs::write(dir.join(format!("{}.csv", self.command)), self.csv()?)?;
        }
        if !quiet {
            let text = match format {
                Format::Json => self.json()?,
                Format::Csv => self.csv()?,
            };
            std::io::stdout().write_all(text.as_bytes())?;
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit rendering with a signed exponent (the form the
/// JSON number parser keeps verbatim); non-finite values become empty.
pub fn fmt(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

fn fix_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(fmt(x).parse::<Number>().expect("formatted float is valid JSON")),
            _ => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(fix_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, fix_floats(v))).collect()),
        other => other,
    }
}

/// Drops `null` and `false` entries so that unset flags never override a
/// config file.
pub fn strip_unset(v: Value) -> Value {
    match v {
        Value::Object(o) => Value::Object(
            o.into_iter().filter(|(_, v)| !matches!(v, Value::Null | Value::Bool(false))).map(|(k, v)| (k, strip_unset(v))).collect(),
        ),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_seventeen_digits() {
        let v = fix_floats(json!({"a": 0.1, "b": [1.0, -2.5e-300], "n": 3, "s": "x"}));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"a":1.0000000000000001e-1,"b":[1.0000000000000000e+0,-2.5000000000000000e-300],"n":3,"s":"x"}"#);
    }

    #[test]
    fn formatted_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-310, -7.25e200] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt(f64::NAN), "");
    }

    #[test]
    fn unset_flags_are_dropped() {
        let v = strip_unset(json!({"k": null, "exact": false, "quiet": true, "params": [1.0]}));
        assert_eq!(v, json!({"quiet": true, "params": [1.0]}));
    }
}
