//! Rotationally invariant profiles rebuilt from phase orbits.
//!
//! Each leaf of the foliation is a sphere of radius `r = 1/sqrt(alpha^2 + k^2)`
//! centered on the `t`-axis. Along the flow the center drifts by
//! `dt/ds = -k / (alpha^2 + k^2)`, and since `alpha' + k(l - 2k) = -(alpha^2 + k^2)`
//! the profile height obeys the same law, so the profile `(r(s), t(s))` comes
//! straight out of the co-integrated trace.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{integrate, Direction, IntegratorConfig, OrbitTrace};
use crate::model::{PhasePoint, SigmaParams};

/// `r` below which a profile point is treated as lying on the axis.
pub const AXIS_EPS: f64 = 1e-9;

/// Upper graph of the Pansu sphere `S_lambda` as a function of `|z|`.
pub fn pansu_profile(lambda: f64, z_abs: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(z_abs >= 0.0 && z_abs <= 1.0 / lambda) {
        return Err(Error::domain(format!("|z| = {z_abs} outside [0, {}]", 1.0 / lambda)));
    }
    let u = (lambda * z_abs).min(1.0);
    Ok((u * (1.0 - u * u).sqrt() + u.acos()) / (2.0 * lambda * lambda))
}

pub fn leaf_radius(p: PhasePoint) -> Result<f64> {
    let m = p.norm();
    if m == 0.0 {
        return Err(Error::Degenerate("alpha = k = 0: the plane branch has no leaf spheres".into()));
    }
    Ok(1.0 / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub s: f64,
    pub r: f64,
    pub t: f64,
    pub alpha: f64,
    pub k: f64,
}

/// Profile `(r, t)` ordered by `s`, with `t = 0` at the start point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCurve {
    pub samples: Vec<ProfileSample>,
}

impl ProfileCurve {
    fn from_trace_pair(bwd: &OrbitTrace, fwd: &OrbitTrace) -> Result<Self> {
        let mut samples = Vec::with_capacity(bwd.samples.len() + fwd.samples.len());
        for smp in bwd.samples.iter().skip(1).rev().chain(&fwd.samples) {
            let r = leaf_radius(smp.point())?;
            samples.push(ProfileSample { s: smp.s, r, t: smp.t, alpha: smp.alpha, k: smp.k });
        }
        Ok(ProfileCurve { samples })
    }

    pub fn max_r(&self) -> f64 {
        self.samples.iter().map(|p| p.r).fold(0.0, f64::max)
    }

    /// Appends an on-axis point at each end that is already close to the axis,
    /// extrapolating `t` with the end slope `dt/dr = -k r / alpha`.
    pub fn with_poles(&self) -> ProfileCurve {
        let mut out = self.samples.clone();
        let gate = 0.05 * self.max_r();
        let pole = |end: &ProfileSample, ds_sign: f64| -> Option<ProfileSample> {
            if end.r >= gate || end.r < AXIS_EPS || end.alpha == 0.0 {
                return None;
            }
            let slope = -end.k * end.r / end.alpha;
            Some(ProfileSample {
                s: end.s + ds_sign * end.r,
                r: 0.0,
                t: end.t - slope * end.r,
                alpha: end.alpha.signum() * f64::INFINITY,
                k: end.k,
            })
        };
        if let Some(p) = out.last().and_then(|e| pole(e, 1.0)) {
            out.push(p);
        }
        if let Some(p) = out.first().and_then(|e| pole(e, -1.0)) {
            out.insert(0, p);
        }
        ProfileCurve { samples: out }
    }
}

/// Rebuilds the profile through `start` by integrating both ways and splicing.
pub fn reconstruct_profile(params: &SigmaParams, start: PhasePoint, cfg: &IntegratorConfig) -> Result<ProfileCurve> {
    if start.norm() == 0.0 {
        return Err(Error::Degenerate("alpha = k = 0 is the plane E x R; there is no profile to rebuild".into()));
    }
    let fwd = integrate(params, start, cfg, Direction::Forward)?;
    let bwd = integrate(params, start, cfg, Direction::Backward)?;
    ProfileCurve::from_trace_pair(&bwd, &fwd)
}

/// Height of the leaf centers along a trace.
pub fn center_track(params: &SigmaParams, trace: &OrbitTrace) -> Result<Vec<(f64, f64)>> {
    trace
        .samples
        .iter()
        .map(|smp| {
            params.check_k(smp.k)?;
            leaf_radius(smp.point())?;
            Ok((smp.s, smp.t))
        })
        .collect()
}

/// Limits of `g'(r)` and `g'(r)/r` as the profile approaches the axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapReport {
    pub g1_limit: f64,
    pub g2_ratio_limit: f64,
    /// Number of profile ends that reached the axis.
    pub ends: usize,
}

/// Value at 0 of the quadratic through three points.
fn extrapolate_to_zero(xs: [f64; 3], ys: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for j in 0..3 {
        let mut w = 1.0;
        for m in 0..3 {
            if m != j {
                w *= (0.0 - xs[m]) / (xs[j] - xs[m]);
            }
        }
        acc += w * ys[j];
    }
    acc
}

/// Secant slopes over three windows at one end, extrapolated to `r = 0`.
///
/// `tail` runs from the end sample inward. The windows are bounded by the end
/// sample and the samples nearest `2, 4, 8` times its radius, which keeps the
/// extrapolation well conditioned when the integrator clusters samples at the end.
fn end_limits(tail: &[ProfileSample]) -> Option<(f64, f64)> {
    let r0 = tail[0].r;
    let mut idx = vec![0usize];
    for factor in [2.0, 4.0, 8.0] {
        let target = factor * r0;
        let j = (0..tail.len()).min_by(|&a, &b| (tail[a].r - target).abs().total_cmp(&(tail[b].r - target).abs()))?;
        if j <= *idx.last().unwrap() || tail[j].r <= tail[*idx.last().unwrap()].r {
            return None;
        }
        idx.push(j);
    }
    let mut xs = [0.0; 3];
    let mut g1 = [0.0; 3];
    let mut g2 = [0.0; 3];
    for w in 0..3 {
        let (a, b) = (&tail[idx[w]], &tail[idx[w + 1]]);
        let slope = (b.t - a.t) / (b.r - a.r);
        let mid = 0.5 * (a.r + b.r);
        xs[w] = mid;
        g1[w] = slope;
        g2[w] = slope / mid;
    }
    Some((extrapolate_to_zero(xs, g1), extrapolate_to_zero(xs, g2)))
}

/// Samples from one end inward while `r` keeps growing and stays below `gate`.
fn inward_run<'a>(samples: impl Iterator<Item = &'a ProfileSample>, gate: f64) -> Vec<ProfileSample> {
    let mut out: Vec<ProfileSample> = Vec::new();
    for p in samples {
        if p.r > gate || out.last().is_some_and(|q| p.r <= q.r) {
            break;
        }
        out.push(*p);
    }
    out
}

/// Limits at every end that reaches within `0.05 max r` of the axis; the
/// worst (largest magnitude) over the ends is reported.
pub fn cap_smoothness_report(profile: &ProfileCurve) -> Result<CapReport> {
    if profile.samples.len() < 4 {
        return Err(Error::Inapplicable("profile has fewer than four samples".into()));
    }
    let gate = 0.05 * profile.max_r();
    let mut worst: Option<(f64, f64)> = None;
    let mut ends = 0;
    let runs = [inward_run(profile.samples.iter(), gate), inward_run(profile.samples.iter().rev(), gate)];
    for run in runs.iter().filter(|r| r.len() >= 4) {
        if let Some((g1, g2)) = end_limits(run) {
            ends += 1;
            worst = Some(match worst {
                None => (g1, g2),
                Some((w1, w2)) => (if g1.abs() > w1.abs() { g1 } else { w1 }, if g2.abs() > w2.abs() { g2 } else { w2 }),
            });
        }
    }
    match worst {
        Some((g1_limit, g2_ratio_limit)) => Ok(CapReport { g1_limit, g2_ratio_limit, ends }),
        None => Err(Error::Inapplicable(format!(
            "profile does not approach the axis (no end below {gate:.6e} = 0.05 max r)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    /// Wavefront OBJ with 1-based indices.
    pub fn write_obj<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", crate::format::num(v[0]), crate::format::num(v[1]), crate::format::num(v[2]))?;
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::BTreeSet::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.faces.len() as i64
    }
}

enum Ring {
    Pole(usize),
    Circle(usize),
}

/// Revolves `(r, t)` about the `t`-axis; on-axis samples collapse to one vertex.
pub fn surface_of_revolution(profile: &ProfileCurve, segments: usize) -> Result<SurfaceMesh> {
    if segments < 3 {
        return Err(Error::domain("segments must be >= 3"));
    }
    if profile.samples.len() < 2 {
        return Err(Error::Degenerate("profile needs at least two samples".into()));
    }
    if profile.samples.iter().all(|p| p.r < AXIS_EPS) {
        return Err(Error::Degenerate("profile lies on the axis".into()));
    }
    let mut vertices = Vec::new();
    let mut rings = Vec::with_capacity(profile.samples.len());
    for p in &profile.samples {
        if p.r < AXIS_EPS {
            rings.push(Ring::Pole(vertices.len()));
            vertices.push([0.0, 0.0, p.t]);
        } else {
            rings.push(Ring::Circle(vertices.len()));
            for m in 0..segments {
                let th = std::f64::consts::TAU * m as f64 / segments as f64;
                vertices.push([p.r * th.cos(), p.r * th.sin(), p.t]);
            }
        }
    }
    let mut faces = Vec::new();
    for pair in rings.windows(2) {
        for m in 0..segments {
            let m1 = (m + 1) % segments;
            match (&pair[0], &pair[1]) {
                (Ring::Circle(a), Ring::Circle(b)) => {
                    faces.push([a + m, a + m1, b + m1]);
                    faces.push([a + m, b + m1, b + m]);
                }
                (Ring::Pole(p), Ring::Circle(b)) => faces.push([*p, b + m1, b + m]),
                (Ring::Circle(a), Ring::Pole(p)) => faces.push([a + m, a + m1, *p]),
                (Ring::Pole(_), Ring::Pole(_)) => {}
            }
        }
    }
    Ok(SurfaceMesh { vertices, faces })
}
