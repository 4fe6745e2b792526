//! Numeric formatting shared by every machine-readable output.

/// Scientific notation with 17 significant digits, enough to round-trip
/// any `f64` exactly. Negative zero prints as zero.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
