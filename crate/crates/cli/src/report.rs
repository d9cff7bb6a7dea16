//! Versioned JSON reports and their table rendering.

use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SCHEMA: &str = "bregmax/1";

/// Significant digits kept in printed numbers.
pub const DIGITS: usize = 12;

/// A finished command: its report and whether every check in it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: Value,
    pub passed: bool,
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", DIGITS - 1, x).parse().expect("formatted float parses")
}

fn round_all(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_all),
        Value::Object(m) => m.values_mut().for_each(round_all),
        _ => {}
    }
}

/// Wraps a command body with the schema tag and rounds every float.
pub fn finish(command: &str, body: &impl Serialize, passed: bool) -> Output {
    let mut v = serde_json::to_value(body).expect("report bodies serialize");
    round_all(&mut v);
    let mut m = Map::new();
    m.insert("schema".into(), SCHEMA.into());
    m.insert("command".into(), command.into());
    m.insert("passed".into(), passed.into());
    match v {
        Value::Object(body) => m.extend(body),
        other => {
            m.insert("result".into(), other);
        }
    }
    Output { report: Value::Object(m), passed }
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        Value::Array(a) => {
            let items: Option<Vec<String>> = a.iter().map(scalar).collect();
            match items {
                Some(items) => rows.push((prefix.to_string(), format!("[{}]", items.join(", ")))),
                None => {
                    for (i, x) in a.iter().enumerate() {
                        flatten(&format!("{prefix}[{i}]"), x, rows);
                    }
                }
            }
        }
        other => rows.push((prefix.to_string(), scalar(other).unwrap_or_default())),
    }
}

/// Two-column `key  value` rendering of a report.
pub fn render_table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, val) in rows {
        out.push_str(&format!("{k:<width$}  {val}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    #[allow(clippy::approx_constant)]
    fn twelve_significant_digits() {
        assert_eq!(round_sig(std::f64::consts::LN_2), 0.693147180560);
        assert_eq!(round_sig(-1.234567890123456e-20), -1.23456789012e-20);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn finish_tags_and_rounds() {
        let out = finish("demo", &json!({"x": 1.0 / 3.0, "n": 3, "v": [2.0f64.sqrt()]}), true);
        assert_eq!(out.report["schema"], "bregmax/1");
        assert_eq!(out.report["command"], "demo");
        assert_eq!(out.report["x"], json!(0.333333333333));
        assert_eq!(out.report["n"], json!(3));
        assert_eq!(out.report["v"][0], json!(1.41421356237));
    }

    #[test]
    fn table_flattens() {
        let t = render_table(&json!({"a": {"b": 1}, "c": [1, 2], "d": [{"e": null}]}));
        assert_eq!(t, "a.b     1\nc       [1, 2]\nd[0].e  -\n");
    }
}
