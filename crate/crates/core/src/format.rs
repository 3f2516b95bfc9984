//! Float text for CSV output.

use std::fmt;

/// Shortest round-trip text for an f64: plain decimal for magnitudes in
/// [1e-5, 1e16) and for zero, exponent form otherwise.
#[derive(Clone, Copy, Debug)]
pub struct Float(pub f64);

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if self.0 == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Appends `values` as one comma-separated line.
pub fn csv_row(out: &mut String, values: &[f64]) {
    for (k, &x) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&Float(x).to_string());
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 0.5, 1.5, -2.25e-30, 1e-5, 9.99e-6, 3.0e20, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = Float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(Float(0.0).to_string(), "0");
        assert_eq!(Float(1.5).to_string(), "1.5");
        assert_eq!(Float(-2.5e-30).to_string(), "-2.5e-30");
    }
}
