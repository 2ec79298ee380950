use serde::{Deserialize, Serialize};

use super::SpectraError;
use crate::branching::OffspringModel;

/// Explicit two-sided bounds on the averaged root spectral mass
/// `E*[<delta_o, 1_]0,E](Delta) delta_o> | |T| < inf]` of Poisson(lambda) trees.
///
/// With `x = lambda Lambda`, `f_minus = x - ln x` and `f_plus = f_minus - 1`:
/// `lower(E) = e^(-f_minus) / (2x) * exp(-2 sqrt(3) f_minus / sqrt(E))` and
/// `upper(E) = e^(f_plus) / x * exp(-f_plus / sqrt(E))`, both clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifshitsBounds {
    pub lambda: f64,
    pub extinction: f64,
    pub lambda_extinct: f64,
    pub f_minus: f64,
    pub f_plus: f64,
}

impl LifshitsBounds {
    pub fn lower(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let x = self.lambda_extinct;
        ((-self.f_minus).exp() / (2.0 * x) * (-2.0 * 3f64.sqrt() * self.f_minus / e.sqrt()).exp()).clamp(0.0, 1.0)
    }

    pub fn upper(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let x = self.lambda_extinct;
        (self.f_plus.exp() / x * (-self.f_plus / e.sqrt()).exp()).clamp(0.0, 1.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bounds serialize")
    }
}

pub fn lifshits_bounds(lambda: f64) -> Result<LifshitsBounds, SpectraError> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(SpectraError::SubcriticalLambda { lambda });
    }
    let model = OffspringModel::poisson(lambda)?;
    let extinction = model.extinction();
    let x = lambda * extinction;
    let f_minus = x - x.ln();
    Ok(LifshitsBounds {
        lambda,
        extinction,
        lambda_extinct: x,
        f_minus,
        f_plus: f_minus - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_two_constants() {
        let b = lifshits_bounds(2.0).unwrap();
        assert!((b.lambda_extinct - 0.40638).abs() < 1e-5);
        assert!((b.f_minus - 1.30686).abs() < 1e-5);
        assert!((b.f_plus - 0.30686).abs() < 1e-5);
        // e^{-f-}/(2x) e^{-2 sqrt3 f-}, recomputed from the rounded constants
        let want = (-1.30686f64).exp() / 0.81276 * (-2.0 * 3f64.sqrt() * 1.30686).exp();
        assert!((b.lower(1.0) - want).abs() < 1e-6);
        assert!((b.lower(1.0) - 3.60e-3).abs() < 5e-5);
    }

    #[test]
    fn bounds_ordered_and_monotone() {
        for lambda in [1.1, 1.5, 2.0, 4.0, 10.0] {
            let b = lifshits_bounds(lambda).unwrap();
            assert!(b.f_plus > 0.0);
            let mut prev = (0.0, 0.0);
            for k in 0..40 {
                let e = 1e-3 * 1.4f64.powi(k);
                let (lo, hi) = (b.lower(e), b.upper(e));
                assert!(lo <= hi && lo >= prev.0 && hi >= prev.1, "{lambda} {e}");
                prev = (lo, hi);
            }
        }
    }

    #[test]
    fn rejects_subcritical() {
        assert!(matches!(lifshits_bounds(1.0), Err(SpectraError::SubcriticalLambda { .. })));
        assert!(lifshits_bounds(2.0).unwrap().to_json().contains("\"f_minus\""));
    }
}
