//! Deterministic text output: every float is rounded to 12 significant digits.

use serde::Serialize;
use serde_json::Value;

/// Significant digits carried by every printed float.
pub const SIG_DIGITS: usize = 12;

/// Rounds `x` to [`SIG_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal text of `round_sig(x)`; plain notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Serializes `value` as pretty JSON with all floats rounded.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// A CSV table whose first line names the schema and its version.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(schema: &str, version: u32, columns: &[&str]) -> Self {
        Self { text: format!("# promptcast {schema} v{version}\n{}\n", columns.join(",")) }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
