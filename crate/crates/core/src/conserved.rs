//! The first integral `E = V(k) + alpha^2 g(k) / 2` built from the integrating factor `g`.
//!
//! `g` solves `g' = -2g / (2k - l)`; `V' = g (k^2 - k l) / (2k - l)`. Both are
//! defined only between consecutive singular loci (`k = +-k_c2`, and `k = 0`
//! when `l` is singular there), so a [`FirstIntegral`] is tied to one such interval.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::model::{critical_k, on_invariant_line, PhasePoint, SigmaParams};
use crate::quadrature;

/// Points closer than this to a region boundary are refused.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

const ANCHOR_SPACING: f64 = 0.25;
const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-13;

fn kc2_power(params: &SigmaParams) -> f64 {
    f64::from(params.i()) * params.sigma_tilde() / f64::from(2 * params.n() + params.i() - 1)
}

/// Integrating factor, normalised so that `g = |k^i - k_c2^i|^(-2/(2n+i-1))`.
pub fn g_of_k(params: &SigmaParams, k: f64) -> Result<f64> {
    let d = k.powi(params.i() as i32) - kc2_power(params);
    if d == 0.0 || on_invariant_line(params, k) {
        return Err(Error::Singularity { k });
    }
    Ok(d.abs().powf(-2.0 / f64::from(2 * params.n() + params.i() - 1)))
}

/// `dV/dk` written so that it stays finite at `k = 0`.
fn potential_density(params: &SigmaParams, k: f64) -> f64 {
    let ki = k.powi(params.i() as i32);
    let b = params.sigma_tilde();
    let g = g_of_k(params, k).unwrap_or(f64::NAN);
    g * k * (params.null_coeff() * ki - b) / (params.line_coeff() * ki - b)
}

/// Sorted singular loci of the first integral.
pub fn region_boundaries(params: &SigmaParams) -> Vec<f64> {
    let mut out: Vec<f64> = critical_k(params).k_c2_roots().collect();
    if params.c() == 0.0 || params.singular_at_zero() {
        out.push(0.0);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Region-local energy evaluator.
pub struct FirstIntegral {
    params: SigmaParams,
    k_ref: f64,
    lo: f64,
    hi: f64,
    /// `V` at `k_ref + j * ANCHOR_SPACING`, filled outward from `j = 0`.
    anchors: Mutex<BTreeMap<i64, f64>>,
}

impl fmt::Debug for FirstIntegral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FirstIntegral")
            .field("params", &self.params)
            .field("k_ref", &self.k_ref)
            .field("region", &(self.lo, self.hi))
            .finish()
    }
}

impl Clone for FirstIntegral {
    fn clone(&self) -> Self {
        FirstIntegral { anchors: Mutex::new(self.anchors.lock().unwrap().clone()), ..*self }
    }
}

impl FirstIntegral {
    pub fn new(params: &SigmaParams, k_ref: f64) -> Result<Self> {
        if !k_ref.is_finite() {
            return Err(Error::domain("k_ref must be finite"));
        }
        let bounds = region_boundaries(params);
        let lo = bounds.iter().copied().filter(|&b| b < k_ref).fold(f64::NEG_INFINITY, f64::max);
        let hi = bounds.iter().copied().filter(|&b| b > k_ref).fold(f64::INFINITY, f64::min);
        let fi = FirstIntegral { params: *params, k_ref, lo, hi, anchors: Mutex::new(BTreeMap::from([(0, 0.0)])) };
        fi.check(k_ref)?;
        Ok(fi)
    }

    pub fn params(&self) -> &SigmaParams {
        &self.params
    }

    pub fn k_ref(&self) -> f64 {
        self.k_ref
    }

    /// Open interval `(lo, hi)` the integral lives on.
    pub fn region(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, k: f64) -> bool {
        k.is_finite() && k > self.lo + BOUNDARY_MARGIN && k < self.hi - BOUNDARY_MARGIN
    }

    fn check(&self, k: f64) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::Region { k, lo: self.lo, hi: self.hi })
        }
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        quadrature::integrate(|x| potential_density(&self.params, x), a, b, QUAD_ABS_TOL, QUAD_REL_TOL)
    }

    fn anchor(&self, j: i64) -> Result<f64> {
        let mut cache = self.anchors.lock().unwrap();
        if let Some(v) = cache.get(&j) {
            return Ok(*v);
        }
        let step = j.signum();
        // nearest cached anchor on the way out from 0
        let mut m = j;
        while !cache.contains_key(&m) {
            m -= step;
        }
        let mut v = cache[&m];
        while m != j {
            let next = m + step;
            let a = self.k_ref + m as f64 * ANCHOR_SPACING;
            let b = self.k_ref + next as f64 * ANCHOR_SPACING;
            v += self.segment(a, b)?;
            cache.insert(next, v);
            m = next;
        }
        Ok(v)
    }

    /// `V(k) = int_{k_ref}^{k} g (x^2 - x l) / (2x - l) dx`.
    pub fn potential(&self, k: f64) -> Result<f64> {
        self.check(k)?;
        let j = ((k - self.k_ref) / ANCHOR_SPACING).trunc() as i64;
        let base = self.anchor(j)?;
        Ok(base + self.segment(self.k_ref + j as f64 * ANCHOR_SPACING, k)?)
    }

    pub fn g(&self, k: f64) -> Result<f64> {
        self.check(k)?;
        g_of_k(&self.params, k)
    }

    pub fn energy(&self, p: PhasePoint) -> Result<f64> {
        let v = self.potential(p.k)?;
        Ok(v + 0.5 * p.alpha * p.alpha * g_of_k(&self.params, p.k)?)
    }

    /// `|alpha|` on the level set `E` above `k`, if real.
    pub fn alpha_from_k(&self, k: f64, energy: f64) -> Result<Option<f64>> {
        let v = self.potential(k)?;
        let g = g_of_k(&self.params, k)?;
        let q = 2.0 * (energy - v) / g;
        let slack = 1e-12 * (energy.abs() + v.abs()) / g;
        Ok(if q >= 0.0 {
            Some(q.sqrt())
        } else if q >= -slack {
            Some(0.0)
        } else {
            None
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, i: u32, c: f64) -> SigmaParams {
        SigmaParams::new(n, i, c).unwrap()
    }

    #[test]
    fn g_examples() {
        let p = params(2, 1, 4.0);
        assert_eq!(g_of_k(&p, 2.0).unwrap(), 1.0);
        assert_eq!(g_of_k(&p, 5.0).unwrap(), 0.5);
        assert!(matches!(g_of_k(&p, 1.0), Err(Error::Singularity { .. })));
    }

    #[test]
    fn g_solves_its_ode() {
        for (n, i, c) in [(2, 1, 4.0), (2, 3, 1.0), (3, 4, -1.0), (2, 2, 6.0), (3, 2, 0.0)] {
            let p = params(n, i, c);
            for k in [-2.3f64, -0.6, 0.4, 1.9, 3.1] {
                let h = 1e-6 * k.abs();
                let fd = (g_of_k(&p, k + h).unwrap() - g_of_k(&p, k - h).unwrap()) / (2.0 * h);
                let l = crate::model::l_of_k(&p, k).unwrap();
                let expect = -2.0 * g_of_k(&p, k).unwrap() / (2.0 * k - l);
                assert!((fd - expect).abs() <= 1e-6 * expect.abs(), "{p:?} k={k}: {fd} vs {expect}");
            }
        }
    }

    #[test]
    fn regions() {
        let fi = FirstIntegral::new(&params(2, 1, 4.0), 2.0).unwrap();
        assert_eq!(fi.region(), (1.0, f64::INFINITY));
        let fi = FirstIntegral::new(&params(2, 3, 1.0), 0.3).unwrap();
        let (lo, hi) = fi.region();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.5f64.cbrt()).abs() < 1e-15);
        let fi = FirstIntegral::new(&params(3, 4, -1.0), -1.0).unwrap();
        assert_eq!(fi.region(), (f64::NEG_INFINITY, 0.0));
        assert!(FirstIntegral::new(&params(2, 1, 4.0), 1.0 + 1e-7).is_err());
    }

    #[test]
    fn potential_basics() {
        let fi = FirstIntegral::new(&params(2, 1, 4.0), 2.0).unwrap();
        assert_eq!(fi.potential(2.0).unwrap(), 0.0);
        assert!(matches!(fi.potential(1.0 + 1e-7), Err(Error::Region { .. })));
        assert!(fi.potential(1.0 + 1e-3).unwrap().abs() > fi.potential(1.1).unwrap().abs());
    }

    /// Composite Simpson with Richardson extrapolation as an independent oracle.
    #[test]
    fn potential_matches_simpson() {
        let p = params(2, 1, 4.0);
        let fi = FirstIntegral::new(&p, 2.0).unwrap();
        let f = |x: f64| {
            let l = crate::model::l_of_k(&p, x).unwrap();
            g_of_k(&p, x).unwrap() * (x * x - x * l) / (2.0 * x - l)
        };
        let simpson = |m: usize| {
            let h = 1.0 / m as f64;
            let mut acc = f(2.0) + f(3.0);
            for j in 1..m {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(2.0 + j as f64 * h);
            }
            acc * h / 3.0
        };
        let (s1, s2) = (simpson(2000), simpson(4000));
        let oracle = s2 + (s2 - s1) / 15.0;
        assert!((fi.potential(3.0).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn potential_is_order_independent() {
        let p = params(2, 1, 4.0);
        let a = FirstIntegral::new(&p, 2.0).unwrap();
        let b = FirstIntegral::new(&p, 2.0).unwrap();
        let va = [a.potential(4.1).unwrap(), a.potential(2.7).unwrap()];
        let vb = [b.potential(4.1).unwrap(), b.potential(2.7).unwrap()];
        assert_eq!(va, vb);
        let c = FirstIntegral::new(&p, 2.0).unwrap();
        assert_eq!(c.potential(2.7).unwrap(), va[1]);
        assert_eq!(c.potential(4.1).unwrap(), va[0]);
    }

    #[test]
    fn energy_round_trip() {
        let fi = FirstIntegral::new(&params(2, 1, 4.0), 2.0).unwrap();
        let e = fi.energy(PhasePoint { alpha: 0.7, k: 2.5 }).unwrap();
        assert!((fi.alpha_from_k(2.5, e).unwrap().unwrap() - 0.7).abs() < 1e-9);
        let mirrored = fi.energy(PhasePoint { alpha: -0.7, k: 2.5 }).unwrap();
        assert_eq!(e, mirrored);
    }
}
