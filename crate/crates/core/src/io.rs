//! Small shared helpers for text output.

/// Shortest round-trip decimal form, switching to exponent notation for very
/// small or very large magnitudes.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_float;

    #[test]
    fn roundtrips() {
        for x in [0.0, 1.5, -2.25e-12, 1e300, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(1e-20), "1e-20");
        assert_eq!(fmt_float(0.5), "0.5");
    }
}
