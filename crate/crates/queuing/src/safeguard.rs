//! Bounded extensions of ratio and log terms.
//!
//! Outside the safe region each function continues along its tangent at
//! the knee, so values and slopes stay finite whatever the tracking
//! variables do.

/// Relative denominator floor used by the ratio-type outer functions.
pub const DEFAULT_DEN_EPS: f64 = 1e-9;

/// `1/s` for `s > eps`, otherwise `(2 eps - s)/eps²`. Returns the value and
/// the derivative in `s`. Continuous with continuous slope at `s = eps`.
#[inline]
pub fn safe_inverse(s: f64, eps: f64) -> (f64, f64) {
    if s > eps {
        (1.0 / s, -1.0 / (s * s))
    } else {
        ((2.0 * eps - s) / (eps * eps), -1.0 / (eps * eps))
    }
}

/// `ln x` for `x > eps`, otherwise its tangent at `eps`. Value and slope.
#[inline]
pub fn safe_log(x: f64, eps: f64) -> (f64, f64) {
    if x > eps {
        (x.ln(), 1.0 / x)
    } else {
        (eps.ln() + (x - eps) / eps, 1.0 / eps)
    }
}

/// Logistic function and its derivative, stable for large `|t|`.
#[inline]
pub fn sigmoid(t: f64) -> (f64, f64) {
    let v = if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    };
    (v, v * (1.0 - v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_is_continuous_at_knee() {
        let eps = 0.95;
        let (a, da) = safe_inverse(eps + 1e-12, eps);
        let (b, db) = safe_inverse(eps, eps);
        assert!((a - b).abs() < 1e-10);
        assert!((da - db).abs() < 1e-10);
        assert!((b - 1.0 / eps).abs() < 1e-15);
    }

    #[test]
    fn inverse_exact_on_safe_region() {
        assert_eq!(safe_inverse(2.0, 1e-9).0, 0.5);
    }

    #[test]
    fn log_extension_is_tangent() {
        let (v, d) = safe_log(-1.0, 0.5);
        assert!((v - (0.5f64.ln() - 3.0)).abs() < 1e-15);
        assert_eq!(d, 2.0);
        assert_eq!(safe_log(3.0, 1e-9).0, 3.0f64.ln());
    }

    #[test]
    fn sigmoid_symmetry_and_saturation() {
        assert_eq!(sigmoid(0.0).0, 0.5);
        assert!(sigmoid(800.0).0 == 1.0 && sigmoid(-800.0).0 == 0.0);
        let (a, _) = sigmoid(1.3);
        let (b, _) = sigmoid(-1.3);
        assert!((a + b - 1.0).abs() < 1e-15);
    }
}
