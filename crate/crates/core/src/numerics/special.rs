use crate::error::{Error, Result};

/// Euler gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma function requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn known_values() {
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(0.5).unwrap() / PI.sqrt() - 1.0).abs() < 1e-12);
        assert!((gamma_fn(5.0).unwrap() / 24.0 - 1.0).abs() < 1e-12);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn recurrence_holds() {
        let mut x = 0.1;
        while x <= 10.0 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-11, "x={x}");
            x += 0.037;
        }
    }
}
