//! Numeric formatting shared by all file writers.

/// Format with exactly 12 significant digits, locale-independent.
///
/// Scientific notation keeps the digit count fixed for any magnitude.
/// Negative zero is normalized so equal values always print identically.
pub(crate) fn sig12(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{:.11e}", x)
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(
            sig12(1.0 / (4.0 * std::f64::consts::PI)),
            "7.95774715459e-2"
        );
        assert_eq!(sig12(0.0), "0.00000000000e0");
        assert_eq!(sig12(-0.0), "0.00000000000e0");
        assert_eq!(sig12(-120.0), "-1.20000000000e2");
    }
}
