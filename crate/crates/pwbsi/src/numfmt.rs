//! Fixed number formatting and canonical JSON text, so that exports are
//! byte-stable for a given input.

use std::fmt::Write;

use serde_json::Value;

/// Significant digits of every exported number.
pub const SIG_DIGITS: usize = 9;

/// `x` rounded to `digits` significant digits, written in its shortest form:
/// plain decimal for moderate magnitudes, exponent form otherwise.
/// Non-finite values are written as `NaN`, `inf` and `-inf`.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", digits.max(1) - 1, x).parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let a = rounded.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// [`sig`] at the export precision.
pub fn num(x: f64) -> String {
    sig(x, SIG_DIGITS)
}

/// Pretty JSON with object keys sorted and floats at the export precision;
/// non-finite floats become `null`.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&num(f));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                write_value(out, &map[k.as_str()], level + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// Serialize any value through [`canonical_json`].
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> serde_json::Result<String> {
    Ok(canonical_json(&serde_json::to_value(value)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.1 + 0.2, 9), "0.3");
        assert_eq!(sig(123456789.4, 9), "123456789");
        assert_eq!(sig(6e9, 9), "6000000000");
        assert_eq!(sig(1.23456789012e-12, 9), "1.23456789e-12");
        assert_eq!(sig(-0.0, 9), "0");
        assert_eq!(sig(f64::INFINITY, 9), "inf");
        assert_eq!(sig(2.0 / 3.0, 3), "0.667");
    }

    #[test]
    fn json_keys_are_sorted_and_floats_rounded() {
        let v = json!({"b": 1, "a": [0.1 + 0.2, null], "c": {"z": true, "y": "q\""}});
        assert_eq!(
            canonical_json(&v),
            "{\n  \"a\": [\n    0.3,\n    null\n  ],\n  \"b\": 1,\n  \"c\": {\n    \"y\": \"q\\\"\",\n    \"z\": true\n  }\n}\n"
        );
    }
}
