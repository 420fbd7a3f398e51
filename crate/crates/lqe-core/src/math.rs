//! Small numeric helpers shared across modules.
//!
//! Transcendentals come from `libm` so the crate stays `no_std`; integer
//! powers are plain multiplication chains for exactness.

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Round half away from zero, like `f64::round`.
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// x^k for small integer k, with the domain convention 0^k := 0 for k < 0
/// (a missing-signal RSSI of zero must never blow up to infinity).
pub fn powi_zero_floor(x: f64, k: i8) -> f64 {
    if k < 0 && x == 0.0 {
        return 0.0;
    }
    let mut result = 1.0;
    for _ in 0..k.unsigned_abs() {
        result *= x;
    }
    if k < 0 {
        1.0 / result
    } else {
        result
    }
}

/// Standard logistic function 1 / (1 + e^-x).
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divisor n).
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    sqrt(var.max(0.0))
}

/// Sample standard deviation (divisor n - 1); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var =
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    sqrt(var.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn powers_with_zero_floor() {
        assert_eq!(powi_zero_floor(0.0, -2), 0.0);
        assert_eq!(powi_zero_floor(0.0, -4), 0.0);
        assert_eq!(powi_zero_floor(0.0, 3), 0.0);
        assert_eq!(powi_zero_floor(2.0, 3), 8.0);
        assert_eq!(powi_zero_floor(2.0, -2), 0.25);
        assert_eq!(powi_zero_floor(5.0, 0), 1.0);
    }

    #[test]
    fn logistic_midpoint_and_tails() {
        assert_relative_eq!(logistic(0.0), 0.5);
        assert!(logistic(20.0) > 0.999_999);
        assert!(logistic(-20.0) < 1e-6);
    }

    #[test]
    fn std_flavors() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(population_std(&v), sqrt(1.25), epsilon = 1e-12);
        assert_relative_eq!(sample_std(&v), sqrt(5.0 / 3.0), epsilon = 1e-12);
        assert_eq!(sample_std(&[7.0]), 0.0);
        assert_eq!(population_std(&[]), 0.0);
    }
}
