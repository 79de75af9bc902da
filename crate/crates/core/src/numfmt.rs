// SPDX-License-Identifier: Apache-2.0

//! Fixed-precision number formatting for text outputs.

/// Significant digits used for every number written to CSV/JSON outputs.
pub const SIG_DIGITS: usize = 9;

/// Rounds `x` to [`SIG_DIGITS`] significant digits.
///
/// The result is the `f64` nearest to the decimal rounding, so its shortest
/// `Display` form has at most nine significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("scientific formatting always parses")
}

/// Formats `x` with at most nine significant digits, without exponent noise
/// for ordinary magnitudes.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // avoid "-0"
        return "0".to_string();
    }
    format!("{r}")
}
