use log::debug;
use serde::Serialize;

use super::integrate::{integrate_with, StopRule};
use super::{Direction, IntegratorConfig, OrbitTrace, Termination};
use crate::error::{Error, Result};
use crate::model::{critical_k, on_invariant_line, vector_field, PhasePoint, SigmaParams, LOCUS_TOL};

/// Qualitative outcome of an orbit.
///
/// Serialized with the variant name under `class`, followed by its payload.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum OrbitClass {
    Stationary {
        alpha: f64,
        k: f64,
    },
    ConstantKLine {
        k: f64,
    },
    Periodic {
        period: f64,
        k_min: f64,
        k_max: f64,
    },
    /// Both ends reach the `alpha`-axis at finite `s`, on opposite sides of the `k`-axis.
    ArcToAlphaAxis {
        s_minus: f64,
        s_plus: f64,
        alpha_minus: f64,
        alpha_plus: f64,
        alpha_end: f64,
    },
    /// The arcs of the `k`-half-plane without an invariant line (odd `i`).
    ArcBiInfinite {
        alpha_limit: f64,
        alpha_minus: f64,
        alpha_plus: f64,
        s_minus: f64,
        s_plus: f64,
    },
    HomoclinicToOrigin,
    Truncated {
        reason: String,
    },
}

impl OrbitClass {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitClass::Stationary { .. } => "Stationary",
            OrbitClass::ConstantKLine { .. } => "ConstantKLine",
            OrbitClass::Periodic { .. } => "Periodic",
            OrbitClass::ArcToAlphaAxis { .. } => "ArcToAlphaAxis",
            OrbitClass::ArcBiInfinite { .. } => "ArcBiInfinite",
            OrbitClass::HomoclinicToOrigin => "HomoclinicToOrigin",
            OrbitClass::Truncated { .. } => "Truncated",
        }
    }
}

/// Sections needed for a full-loop return check.
const LOOP_SECTIONS: usize = 3;

/// True when `k` lies in the half-plane without a `k_c2` line, where odd-`i`
/// orbits run from the `alpha`-axis back to it.
fn on_far_side(params: &SigmaParams, k: f64) -> bool {
    if params.c() == 0.0 || params.is_even() || params.i() == 1 {
        return false;
    }
    critical_k(params).k_c2_primary().is_some_and(|kc| kc.signum() != k.signum())
}

fn is_contracting(trace: &OrbitTrace) -> bool {
    let radii: Vec<f64> = trace.samples.iter().map(|s| s.point().norm()).collect();
    let max = radii.iter().copied().fold(0.0, f64::max);
    let tail = &radii[radii.len() - radii.len() / 10 - 1..];
    let last = *radii.last().unwrap();
    last < 0.05 * max && tail.windows(2).all(|w| w[1] <= w[0])
}

pub fn classify_orbit(params: &SigmaParams, start: PhasePoint, cfg: &IntegratorConfig) -> Result<OrbitClass> {
    cfg.validate()?;
    let start = PhasePoint::new(start.alpha, start.k)?;
    let (dk, da) = vector_field(params, start)?;
    let cv = critical_k(params);
    let at_kc1 = start.alpha == 0.0 && cv.k_c1_roots().any(|kc| (start.k - kc).abs() <= LOCUS_TOL * kc.abs());
    if (dk == 0.0 && da == 0.0) || at_kc1 {
        return Ok(OrbitClass::Stationary { alpha: start.alpha, k: start.k });
    }
    if on_invariant_line(params, start.k) {
        let k = cv.k_c2_roots().find(|kc| (start.k - kc).abs() <= LOCUS_TOL * kc.abs()).unwrap_or(0.0);
        return Ok(OrbitClass::ConstantKLine { k });
    }

    let stop = StopRule { sections: Some(LOOP_SECTIONS) };
    let fwd = integrate_with(params, start, cfg, Direction::Forward, stop)?;
    let secs: Vec<_> = fwd.sections().copied().collect();
    if secs.len() >= LOOP_SECTIONS {
        let (a, b, c) = (secs[0], secs[1], secs[2]);
        let mismatch = (c.k - a.k).abs();
        debug!("section return mismatch {mismatch:e}");
        if mismatch <= 10.0 * cfg.section_tol * a.k.abs().max(1.0) {
            return Ok(OrbitClass::Periodic { period: c.s - a.s, k_min: a.k.min(b.k), k_max: a.k.max(b.k) });
        }
        return Ok(OrbitClass::Truncated { reason: format!("section return mismatch {mismatch:e}") });
    }

    let bwd = integrate_with(params, start, cfg, Direction::Backward, stop)?;
    match (fwd.termination, bwd.termination) {
        (Termination::AlphaAxis, Termination::AlphaAxis) => {
            let plus = fwd.terminal_event().expect("terminal event");
            let minus = bwd.terminal_event().expect("terminal event");
            let (ap, am) = (plus.alpha, minus.alpha);
            if on_far_side(params, start.k) {
                Ok(OrbitClass::ArcBiInfinite {
                    alpha_limit: 0.5 * (ap.abs() + am.abs()),
                    alpha_minus: am,
                    alpha_plus: ap,
                    s_minus: minus.s,
                    s_plus: plus.s,
                })
            } else if ap * am < 0.0 {
                Ok(OrbitClass::ArcToAlphaAxis {
                    s_minus: minus.s,
                    s_plus: plus.s,
                    alpha_minus: am,
                    alpha_plus: ap,
                    alpha_end: 0.5 * (ap.abs() + am.abs()),
                })
            } else {
                Ok(OrbitClass::Truncated { reason: "arc endpoints on the same side of the k-axis".into() })
            }
        }
        (Termination::SMax, Termination::SMax) if params.c() == 0.0 && is_contracting(&fwd) && is_contracting(&bwd) => {
            Ok(OrbitClass::HomoclinicToOrigin)
        }
        (f, b) => Ok(OrbitClass::Truncated { reason: format!("forward: {}; backward: {}", f.as_str(), b.as_str()) }),
    }
}

/// `s`-length from `(0, k0)` to the next crossing of `alpha = 0`.
pub fn half_period(params: &SigmaParams, k0: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if params.c() <= 0.0 {
        return Err(Error::Classification("periodic orbits need c > 0".into()));
    }
    let cv = critical_k(params);
    let inside = cv.k_c2_roots().any(|kc| kc.signum() == k0.signum() && k0.abs() > kc.abs() * (1.0 + LOCUS_TOL));
    if !inside {
        return Err(Error::Classification(format!("k0 = {k0} is outside the periodic band")));
    }
    if cv.k_c1_roots().any(|kc| (k0 - kc).abs() <= LOCUS_TOL * kc.abs()) {
        return Err(Error::Classification(format!("(0, {k0}) is a stationary point")));
    }
    let tr = integrate_with(params, PhasePoint { alpha: 0.0, k: k0 }, cfg, Direction::Forward, StopRule { sections: Some(1) })?;
    match tr.termination {
        Termination::SectionLimit => Ok(tr.last().s),
        other => Err(Error::Classification(format!("no return to the section: {}", other.as_str()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, i: u32, c: f64) -> SigmaParams {
        SigmaParams::new(n, i, c).unwrap()
    }

    fn pt(alpha: f64, k: f64) -> PhasePoint {
        PhasePoint { alpha, k }
    }

    #[test]
    fn spec_examples() {
        let cfg = IntegratorConfig::default();
        let p = params(2, 1, 4.0);
        assert!(matches!(classify_orbit(&p, pt(0.0, 3.0), &cfg).unwrap(), OrbitClass::Periodic { .. }));
        assert_eq!(classify_orbit(&p, pt(0.3, 1.0), &cfg).unwrap(), OrbitClass::ConstantKLine { k: 1.0 });
        assert_eq!(classify_orbit(&params(2, 2, 0.0), pt(0.0, 1.0), &cfg).unwrap(), OrbitClass::HomoclinicToOrigin);
    }

    #[test]
    fn stationary_points() {
        let cfg = IntegratorConfig::default();
        let p = params(2, 1, 4.0);
        assert!(matches!(classify_orbit(&p, pt(0.0, 0.0), &cfg).unwrap(), OrbitClass::Stationary { .. }));
        let kc1 = critical_k(&p).k_c1_pos.unwrap();
        assert!(matches!(classify_orbit(&p, pt(0.0, kc1), &cfg).unwrap(), OrbitClass::Stationary { .. }));
    }

    #[test]
    fn odd_i_bands() {
        let cfg = IntegratorConfig::default();
        let p = params(2, 3, 1.0);
        let kc2 = critical_k(&p).k_c2_pos.unwrap();
        match classify_orbit(&p, pt(0.2, 0.5 * kc2), &cfg).unwrap() {
            OrbitClass::ArcToAlphaAxis { alpha_minus, alpha_plus, s_minus, s_plus, .. } => {
                assert!((alpha_minus + alpha_plus).abs() < 1e-5);
                assert!(s_minus < 0.0 && s_plus > 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(classify_orbit(&p, pt(1.0, -0.5), &cfg).unwrap(), OrbitClass::ArcBiInfinite { .. }));
        match classify_orbit(&p, pt(0.5, 2.0), &cfg).unwrap() {
            OrbitClass::Periodic { k_min, .. } => assert!(k_min > kc2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn half_period_examples() {
        let cfg = IntegratorConfig::default();
        let p = params(2, 1, 4.0);
        let t = half_period(&p, 3.0, &cfg).unwrap();
        match classify_orbit(&p, pt(0.0, 3.0), &cfg).unwrap() {
            OrbitClass::Periodic { period, .. } => assert!((period - 2.0 * t).abs() < 1e-7),
            other => panic!("{other:?}"),
        }
        assert!(half_period(&p, 4.0 / 3.0, &cfg).is_err());
        assert!(half_period(&p, 0.5, &cfg).is_err());
        assert!(half_period(&params(2, 2, 6.0), -2.0, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn json_has_class_first() {
        let js = serde_json::to_string(&OrbitClass::Periodic { period: 1.0, k_min: 0.5, k_max: 2.0 }).unwrap();
        assert_eq!(js, r#"{"class":"Periodic","period":1.0,"k_min":0.5,"k_max":2.0}"#);
    }
}
