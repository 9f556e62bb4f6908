use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{critical_k, PhasePoint, SigmaParams};

/// Exact solution on the invariant line `k = k_c2` (`c > 0`):
/// `alpha(s) = k_c2 tan(atan(alpha0 / k_c2) + k_c2 (s0 - s))`.
///
/// `s` must lie on the tangent branch containing `s0`.
pub fn closed_form_line(params: &SigmaParams, s0: f64, alpha0: f64, s: f64) -> Result<PhasePoint> {
    if params.c() <= 0.0 {
        return Err(Error::domain("the tangent solution needs c > 0"));
    }
    if !(s0.is_finite() && alpha0.is_finite() && s.is_finite()) {
        return Err(Error::domain("non-finite argument"));
    }
    let kc = critical_k(params).k_c2_pos.expect("c > 0 has a positive k_c2 root");
    let theta0 = (alpha0 / kc).atan();
    let theta = theta0 + kc * (s0 - s);
    if theta.abs() >= FRAC_PI_2 {
        // nearest pole on the side of s
        let edge = if theta > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
        return Err(Error::Pole { s: s0 + (theta0 - edge) / kc });
    }
    let alpha = kc * theta.tan();
    if !alpha.is_finite() {
        return Err(Error::Pole { s });
    }
    Ok(PhasePoint { alpha, k: kc })
}

/// Exact solution on the `alpha`-axis invariant line when `c = 0`:
/// `alpha(s) = 1 / (s + 1/alpha0)`, `k = 0`.
pub fn closed_form_c0(alpha0: f64, s: f64) -> Result<PhasePoint> {
    if alpha0 == 0.0 || !alpha0.is_finite() || !s.is_finite() {
        return Err(Error::domain("alpha0 must be finite and nonzero"));
    }
    let pole = -1.0 / alpha0;
    let shifted = s - pole;
    if shifted == 0.0 || shifted.signum() != alpha0.signum() {
        return Err(Error::Pole { s: pole });
    }
    Ok(PhasePoint { alpha: 1.0 / shifted, k: 0.0 })
}
