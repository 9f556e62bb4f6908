//! Randomised invariant checks over the algebraic layer, run by `sigmak selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conserved::g_of_k;
use crate::geometry::pansu_profile;
use crate::model::{
    binomial, critical_k, dl_dk, l_of_k, nullcline_alpha, sigma_of, vector_field, PhasePoint, SigmaParams,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    pub failures: usize,
    /// First failing input, if any.
    pub example: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn params(&mut self, c_zero_every: u32) -> SigmaParams {
        let n = self.rng.gen_range(2..=5);
        let i = self.rng.gen_range(1..=2 * n - 1);
        let c = if self.rng.gen_ratio(1, c_zero_every) { 0.0 } else { self.rng.gen_range(-5.0..5.0) };
        SigmaParams::new(n, i, c).expect("sampled params are valid")
    }

    fn with_parity(&mut self, even: bool) -> SigmaParams {
        loop {
            let p = self.params(8);
            if p.is_even() == even {
                return p;
            }
        }
    }

    /// `|k|` in `[0.1, 3]` with a random sign.
    fn k(&mut self) -> f64 {
        let m = self.rng.gen_range(0.1..3.0);
        if self.rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    }

    fn alpha(&mut self) -> f64 {
        self.rng.gen_range(-3.0..3.0)
    }
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(a.abs()).max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check<F>(name: &'static str, samples: usize, sampler: &mut Sampler, mut body: F) -> CheckResult
where
    F: FnMut(&mut Sampler) -> Result<(), String>,
{
    let mut failures = 0;
    let mut example = None;
    for _ in 0..samples {
        if let Err(e) = body(sampler) {
            failures += 1;
            example.get_or_insert(e);
        }
    }
    CheckResult { name, samples, failures, example }
}

fn weights(p: &SigmaParams) -> (f64, f64) {
    let m = u64::from(2 * p.n() - 2);
    let lo = binomial(m, u64::from(p.i() - 1)).unwrap() as f64;
    let hi = if p.i() as u64 <= m { binomial(m, u64::from(p.i())).unwrap() as f64 } else { 0.0 };
    (lo, hi)
}

pub const CHECK_NAMES: [&str; 11] = [
    "constraint closure",
    "dl/dk consistency",
    "k-axis reversibility",
    "even-i alpha-axis mirror",
    "sign law under (l, k) -> (-l, -k)",
    "odd-i c <-> -c conjugacy",
    "l - 2k identity",
    "nullcline convexity",
    "integrating factor ODE",
    "stationary points",
    "Pansu profile endpoints",
];

/// Runs every check on `samples` random inputs drawn from `seed`.
pub fn run(samples: usize, seed: u64) -> Vec<CheckResult> {
    let mut s = Sampler { rng: ChaCha8Rng::seed_from_u64(seed) };
    let mut out = Vec::new();

    out.push(check(CHECK_NAMES[0], samples, &mut s, |s| {
        let p = s.params(8);
        let k = s.k();
        let l = l_of_k(&p, k).map_err(|e| e.to_string())?;
        let (wl, wh) = weights(&p);
        let scale = (wl * l * k.powi(p.i() as i32 - 1)).abs() + (wh * k.powi(p.i() as i32)).abs();
        let sigma = sigma_of(&p, l, k);
        close(sigma, p.c(), 1e-12, scale).then_some(()).ok_or(format!("{p:?} k={k}: sigma={sigma}"))
    }));

    out.push(check(CHECK_NAMES[1], samples, &mut s, |s| {
        let p = s.params(8);
        let k = s.k();
        let h = 1e-6 * k.abs();
        let fd = (l_of_k(&p, k + h).unwrap() - l_of_k(&p, k - h).unwrap()) / (2.0 * h);
        let d = dl_dk(&p, k).unwrap();
        let l_scale = l_of_k(&p, k).unwrap().abs() / k.abs();
        close(fd, d, 1e-5, l_scale).then_some(()).ok_or(format!("{p:?} k={k}: {fd} vs {d}"))
    }));

    out.push(check(CHECK_NAMES[2], samples, &mut s, |s| {
        let p = s.params(8);
        let (a, k) = (s.alpha(), s.k());
        let (dk, da) = vector_field(&p, PhasePoint { alpha: a, k }).unwrap();
        let (dk2, da2) = vector_field(&p, PhasePoint { alpha: -a, k }).unwrap();
        (dk2 == -dk && da2 == da).then_some(()).ok_or(format!("{p:?} ({a},{k})"))
    }));

    out.push(check(CHECK_NAMES[3], samples, &mut s, |s| {
        let p = s.with_parity(true);
        let (a, k) = (s.alpha(), s.k());
        let (dk, da) = vector_field(&p, PhasePoint { alpha: a, k }).unwrap();
        let (dk2, da2) = vector_field(&p, PhasePoint { alpha: a, k: -k }).unwrap();
        (close(dk2, -dk, 1e-13, 0.0) && close(da2, da, 1e-13, k * k + a * a))
            .then_some(())
            .ok_or(format!("{p:?} ({a},{k})"))
    }));

    out.push(check(CHECK_NAMES[4], samples, &mut s, |s| {
        let p = s.params(8);
        let (l, k) = (s.rng.gen_range(-4.0..4.0), s.k());
        let lhs = sigma_of(&p, -l, -k);
        let rhs = if p.is_even() { 1.0 } else { -1.0 } * sigma_of(&p, l, k);
        close(lhs, rhs, 1e-13, 0.0).then_some(()).ok_or(format!("{p:?} l={l} k={k}"))
    }));

    out.push(check(CHECK_NAMES[5], samples, &mut s, |s| {
        let p = s.with_parity(false);
        let q = p.with_c(-p.c()).unwrap();
        let (a, k) = (s.alpha(), s.k());
        let (dk, da) = vector_field(&p, PhasePoint { alpha: a, k }).unwrap();
        let (dk2, da2) = vector_field(&q, PhasePoint { alpha: a, k: -k }).unwrap();
        (close(dk2, -dk, 1e-13, 0.0) && close(da2, da, 1e-13, k * k + a * a))
            .then_some(())
            .ok_or(format!("{p:?} ({a},{k})"))
    }));

    out.push(check(CHECK_NAMES[6], samples, &mut s, |s| {
        let p = s.params(8);
        let k = s.k();
        let lhs = l_of_k(&p, k).unwrap() - 2.0 * k;
        let rhs = p.sigma_tilde() * k.powi(1 - p.i() as i32) - p.line_coeff() * k;
        close(lhs, rhs, 1e-12, 2.0 * k.abs() + l_of_k(&p, k).unwrap().abs()).then_some(()).ok_or(format!("{p:?} k={k}"))
    }));

    out.push(check(CHECK_NAMES[7], samples, &mut s, |s| {
        let p = loop {
            let p = s.params(8);
            if p.c() > 0.0 {
                break p;
            }
        };
        let kc1 = critical_k(&p).k_c1_pos.unwrap();
        let k = kc1 * s.rng.gen_range(1.05..4.0);
        let h = 1e-3 * kc1;
        let f = |k: f64| nullcline_alpha(&p, k).unwrap().unwrap();
        let second = f(k + h) - 2.0 * f(k) + f(k - h);
        let big = 1e4 * kc1;
        let ratio = f(big) / big;
        let limit = p.null_coeff().sqrt();
        (second < 0.0 && (ratio - limit).abs() < 1e-3 * limit)
            .then_some(())
            .ok_or(format!("{p:?} k={k}: second difference {second}, ratio {ratio}"))
    }));

    out.push(check(CHECK_NAMES[8], samples, &mut s, |s| {
        let p = s.params(8);
        let k = s.k();
        if crate::model::on_invariant_line(&p, k) || critical_k(&p).k_c2_roots().any(|kc| (k - kc).abs() < 0.05) {
            return Ok(());
        }
        // fourth-order stencil; the nearest singular locus is at least 0.05 away
        let h = 1e-3 * k.abs().min(1.0);
        let g = |x: f64| g_of_k(&p, x).unwrap();
        let fd = (8.0 * (g(k + h) - g(k - h)) - (g(k + 2.0 * h) - g(k - 2.0 * h))) / (12.0 * h);
        let expect = -2.0 * g_of_k(&p, k).unwrap() / (2.0 * k - l_of_k(&p, k).unwrap());
        ((fd - expect).abs() <= 1e-6 * expect.abs() + 1e-8 * g(k) / k.abs()).then_some(()).ok_or(format!("{p:?} k={k}: {fd} vs {expect}"))
    }));

    out.push(check(CHECK_NAMES[9], samples, &mut s, |s| {
        let p = s.params(8);
        let mut pts: Vec<PhasePoint> = critical_k(&p).k_c1_roots().map(|k| PhasePoint { alpha: 0.0, k }).collect();
        if !p.singular_at_zero() {
            pts.push(PhasePoint::ORIGIN);
        }
        for q in pts {
            let (dk, da) = vector_field(&p, q).unwrap();
            if dk.hypot(da) >= 1e-12 * (1.0 + q.k * q.k) {
                return Err(format!("{p:?} at {q:?}: |field| = {}", dk.hypot(da)));
            }
        }
        Ok(())
    }));

    out.push(check(CHECK_NAMES[10], samples, &mut s, |s| {
        let lambda = s.rng.gen_range(0.1..5.0);
        let top = pansu_profile(lambda, 0.0).unwrap();
        let edge = pansu_profile(lambda, 1.0 / lambda).unwrap();
        let expect = std::f64::consts::FRAC_PI_4 / (lambda * lambda);
        (close(top, expect, 1e-14, 0.0) && edge.abs() < 1e-7 * expect).then_some(()).ok_or(format!("lambda={lambda}"))
    }));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let results = run(500, 7);
        assert_eq!(results.len(), CHECK_NAMES.len());
        for r in &results {
            assert!(r.passed(), "{}: {:?}", r.name, r.example);
        }
    }

    #[test]
    fn same_seed_same_results() {
        assert_eq!(run(50, 3), run(50, 3));
    }
}
