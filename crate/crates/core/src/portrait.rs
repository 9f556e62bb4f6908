//! Phase portraits: a seed grid of orbits with nullclines, invariant lines and stationary points.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{classify_orbit, integrate, Direction, IntegratorConfig, OrbitClass, OrbitTrace};
use crate::format::num;
use crate::model::{classify_region, critical_k, nullcline_alpha, vector_field, PhasePoint, RegionLabel, SigmaParams};

/// Seeds closer than this to a singular locus are skipped.
pub const SEED_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitSpec {
    pub params: SigmaParams,
    pub alpha_range: (f64, f64),
    pub k_range: (f64, f64),
    /// Seeds per axis.
    pub grid: usize,
    pub include_nullclines: bool,
    pub include_critical_lines: bool,
    pub include_stationary: bool,
    /// Used for the drawn traces.
    pub draw_cfg: IntegratorConfig,
    /// Used to classify each seed.
    pub classify_cfg: IntegratorConfig,
    pub width: u32,
    pub height: u32,
}

impl PortraitSpec {
    pub fn new(params: SigmaParams) -> Self {
        let mut spec = PortraitSpec {
            params,
            alpha_range: (-3.0, 3.0),
            k_range: (-3.0, 3.0),
            grid: 12,
            include_nullclines: true,
            include_critical_lines: true,
            include_stationary: true,
            draw_cfg: IntegratorConfig::default(),
            classify_cfg: IntegratorConfig::default(),
            width: 800,
            height: 800,
        };
        spec.fit_draw_cfg();
        spec
    }

    /// Draw settings scaled to the viewport: shorter runs, coarser steps, and a box
    /// ten times the plotted range.
    pub fn fit_draw_cfg(&mut self) {
        let extent = [self.alpha_range.0, self.alpha_range.1, self.k_range.0, self.k_range.1]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.draw_cfg = IntegratorConfig { s_max: 25.0, max_step: 0.05, box_bound: 10.0 * extent.max(1.0), ..self.draw_cfg };
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.alpha_range) || !ok(self.k_range) {
            return Err(Error::domain("portrait ranges must be finite and nondegenerate"));
        }
        if self.grid < 1 || self.width < 1 || self.height < 1 {
            return Err(Error::domain("grid and image size must be positive"));
        }
        self.draw_cfg.validate()?;
        self.classify_cfg.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOrbit {
    pub index: usize,
    pub start: PhasePoint,
    pub region: RegionLabel,
    pub class: OrbitClass,
    pub forward: OrbitTrace,
    pub backward: OrbitTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portrait {
    pub spec: PortraitSpec,
    pub orbits: Vec<SeedOrbit>,
    /// Seeds skipped for lying near a singular locus.
    pub excluded: Vec<(usize, PhasePoint)>,
}

/// Cell-centred seed grid, row-major from the lowest `k`.
pub fn seed_grid(spec: &PortraitSpec) -> Vec<PhasePoint> {
    let g = spec.grid;
    let at = |(lo, hi): (f64, f64), j: usize| lo + (j as f64 + 0.5) * (hi - lo) / g as f64;
    (0..g).flat_map(|row| (0..g).map(move |col| PhasePoint { alpha: at(spec.alpha_range, col), k: at(spec.k_range, row) })).collect()
}

fn near_singular(params: &SigmaParams, p: PhasePoint) -> bool {
    params.singular_at_zero() && p.k.abs() < SEED_EXCLUSION
}

pub fn build(spec: &PortraitSpec) -> Result<Portrait> {
    spec.validate()?;
    let params = spec.params;
    let mut excluded = Vec::new();
    let mut jobs = Vec::new();
    for (index, p) in seed_grid(spec).into_iter().enumerate() {
        if near_singular(&params, p) {
            excluded.push((index, p));
        } else {
            jobs.push((index, p));
        }
    }
    // collect preserves input order, so the output is independent of scheduling
    let orbits: Result<Vec<SeedOrbit>> = jobs
        .par_iter()
        .map(|&(index, start)| {
            let class = classify_orbit(&params, start, &spec.classify_cfg)?;
            let forward = integrate(&params, start, &spec.draw_cfg, Direction::Forward)?;
            let backward = integrate(&params, start, &spec.draw_cfg, Direction::Backward)?;
            Ok(SeedOrbit { index, start, region: classify_region(&params, start), class, forward, backward })
        })
        .collect();
    Ok(Portrait { spec: spec.clone(), orbits: orbits?, excluded })
}

impl Portrait {
    /// Seed counts per `(region, class)`.
    pub fn counts(&self) -> BTreeMap<(RegionLabel, &'static str), usize> {
        let mut out = BTreeMap::new();
        for o in &self.orbits {
            *out.entry((o.region, o.class.name())).or_insert(0) += 1;
        }
        out
    }

    pub fn stationary_points(&self) -> Vec<PhasePoint> {
        let p = &self.spec.params;
        let mut out = Vec::new();
        if vector_field(p, PhasePoint::ORIGIN).is_ok_and(|v| v == (0.0, 0.0)) {
            out.push(PhasePoint::ORIGIN);
        }
        out.extend(critical_k(p).k_c1_roots().map(|k| PhasePoint { alpha: 0.0, k }));
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.spec.params;
        writeln!(out, "# n={} i={} c={}", p.n(), p.i(), num(p.c()))?;
        for (j, q) in &self.excluded {
            writeln!(out, "# excluded seed {j}: alpha={} k={}", num(q.alpha), num(q.k))?;
        }
        writeln!(out, "seed,direction,s,alpha,k")?;
        for o in &self.orbits {
            for tr in [&o.forward, &o.backward] {
                for smp in &tr.samples {
                    writeln!(out, "{},{},{},{},{}", o.index, tr.direction.as_str(), num(smp.s), num(smp.alpha), num(smp.k))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_svg(&self) -> String {
        Svg::new(&self.spec).render(self)
    }
}

fn class_colour(c: &OrbitClass) -> &'static str {
    match c {
        OrbitClass::Periodic { .. } => "#1f77b4",
        OrbitClass::ArcToAlphaAxis { .. } => "#2ca02c",
        OrbitClass::ArcBiInfinite { .. } => "#9467bd",
        OrbitClass::HomoclinicToOrigin => "#ff7f0e",
        OrbitClass::ConstantKLine { .. } => "#d62728",
        OrbitClass::Stationary { .. } => "#000000",
        OrbitClass::Truncated { .. } => "#7f7f7f",
    }
}

struct Svg {
    a: (f64, f64),
    k: (f64, f64),
    w: f64,
    h: f64,
}

impl Svg {
    fn new(spec: &PortraitSpec) -> Self {
        Svg { a: spec.alpha_range, k: spec.k_range, w: f64::from(spec.width), h: f64::from(spec.height) }
    }

    fn x(&self, alpha: f64) -> f64 {
        (alpha - self.a.0) / (self.a.1 - self.a.0) * self.w
    }

    fn y(&self, k: f64) -> f64 {
        (self.k.1 - k) / (self.k.1 - self.k.0) * self.h
    }

    /// Polyline of points, split where they leave a generous margin around the view.
    fn polyline(&self, out: &mut String, pts: impl Iterator<Item = (f64, f64)>, style: &str) {
        let lim = 4.0 * self.w.max(self.h);
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, out: &mut String| {
            if run.len() >= 2 {
                out.push_str("<polyline points=\"");
                for (j, (x, y)) in run.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{x:.2},{y:.2}");
                }
                let _ = writeln!(out, "\" {style}/>");
            }
            run.clear();
        };
        for (alpha, k) in pts {
            let (x, y) = (self.x(alpha), self.y(k));
            if x.is_finite() && y.is_finite() && x.abs() < lim && y.abs() < lim {
                run.push((x, y));
            } else {
                flush(&mut run, out);
            }
        }
        flush(&mut run, out);
    }

    fn render(&self, portrait: &Portrait) -> String {
        let spec = &portrait.spec;
        let p = &spec.params;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = spec.width,
            h = spec.height
        );
        let _ = writeln!(s, "<title>n={} i={} c={}</title>", p.n(), p.i(), p.c());
        let _ = writeln!(s, "<defs><clipPath id=\"view\"><rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\"/></clipPath></defs>", spec.width, spec.height);
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>", spec.width, spec.height);
        s.push_str("<g clip-path=\"url(#view)\">\n");
        let axis = "stroke=\"#bbbbbb\" stroke-width=\"1\"";
        let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"0\" x2=\"{:.2}\" y2=\"{}\" {axis}/>", self.x(0.0), self.x(0.0), spec.height);
        let _ = writeln!(s, "<line x1=\"0\" y1=\"{:.2}\" x2=\"{}\" y2=\"{:.2}\" {axis}/>", self.y(0.0), spec.width, self.y(0.0));

        for o in &portrait.orbits {
            let style = format!("fill=\"none\" stroke=\"{}\" stroke-width=\"1\"", class_colour(&o.class));
            for tr in [&o.backward, &o.forward] {
                self.polyline(&mut s, tr.samples.iter().map(|q| (q.alpha, q.k)), &style);
            }
        }
        if spec.include_critical_lines {
            for kc in critical_k(p).k_c2_roots() {
                let _ = writeln!(
                    s,
                    "<line x1=\"0\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>",
                    spec.width,
                    y = self.y(kc)
                );
            }
        }
        if spec.include_nullclines {
            let m = 600;
            let ks: Vec<f64> = (0..=m).map(|j| self.k.0 + (self.k.1 - self.k.0) * j as f64 / m as f64).collect();
            let branch = |sign: f64| ks.iter().map(move |&k| nullcline_alpha(p, k).ok().flatten().map_or((f64::NAN, k), |a| (sign * a, k)));
            let style = "fill=\"none\" stroke=\"#17becf\" stroke-width=\"1.5\"";
            self.polyline(&mut s, branch(1.0), style);
            self.polyline(&mut s, branch(-1.0), style);
        }
        if spec.include_stationary {
            for q in portrait.stationary_points() {
                let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#000000\"/>", self.x(q.alpha), self.y(q.k));
            }
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}
