//! Fixed-precision number output shared by every text format.

/// Rounds to 9 significant decimal digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

/// Shortest decimal text of [`round_sig`]`(v)`, without exponent.
pub fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// JSON number holding [`round_sig`]`(v)`; non-finite values become `null`.
pub fn json_num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round_sig(v))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

pub fn json_nums(values: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(values.iter().map(|&v| json_num(v)).collect())
}
