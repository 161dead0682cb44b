//! Display formatting shared by every front end.

/// Significant digits used for human-facing numbers.
pub const DISPLAY_DIGITS: i32 = 6;

/// Fixed notation with six significant digits, e.g. `20.0000`, `0.130662`,
/// `1234568`. Machine-readable output keeps full precision instead.
pub fn display_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", (DISPLAY_DIGITS - 1) as usize, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let mut decimals = (DISPLAY_DIGITS - 1 - magnitude).max(0);
    let mut text = format!("{:.*}", decimals as usize, x);
    // Rounding may carry into a new leading digit (9.999996 → 10.00000).
    let rounded: f64 = text.parse().unwrap_or(x);
    if decimals > 0 && rounded.abs() >= 10f64.powi(magnitude + 1) {
        decimals -= 1;
        text = format!("{:.*}", decimals as usize, x);
    }
    text
}
