//! Canonical JSON rendering and SHA-256 digests.
//!
//! Canonical form: UTF-8, object keys sorted lexicographically by their
//! bytes, no insignificant whitespace, and floats rendered with the shortest
//! representation that round-trips.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    Ok(canonical_value_string(&value))
}

pub fn canonical_value_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                write_value(&map[key], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the canonical JSON rendering.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(sha256_hex(to_canonical_string(value)?.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_at_every_level() {
        let v = json!({"b": 1, "a": {"z": [1.5, {"y": null, "x": true}], "c": "s"}});
        assert_eq!(
            canonical_value_string(&v),
            r#"{"a":{"c":"s","z":[1.5,{"x":true,"y":null}]},"b":1}"#
        );
    }

    #[test]
    fn float_rendering_round_trips() {
        let x = 0.1_f64 + 0.2;
        let s = canonical_value_string(&json!(x));
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let v = json!({"k": [1e-300, 12345.678, -0.0], "a": "é"});
        let once = canonical_value_string(&v);
        let reparsed: Value = serde_json::from_str(&once).unwrap();
        assert_eq!(canonical_value_string(&reparsed), once);
    }

    #[test]
    fn digest_is_64_hex_chars() {
        let d = digest(&json!({"a": 1})).unwrap();
        assert_eq!(d.len(), 64);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
    }
}
