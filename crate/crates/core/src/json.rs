//! JSON output helpers.

use serde::Serialize;
use serde_json::Value;

use crate::Result;

/// Rounds `x` to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(sig9(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 9 significant digits, so result
/// files diff cleanly across runs.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
