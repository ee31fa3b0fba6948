//! Float formatting shared by every CSV writer.

/// Shortest-free 17-significant-digit scientific form; `NaN`, `inf` and
/// `-inf` spelled out.
pub fn float17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Optional float; `None` is the empty cell.
pub fn opt_float17(x: Option<f64>) -> String {
    x.map(float17).unwrap_or_default()
}
