use log::{debug, trace};

use super::rk::{dp5_step, error_norm, State};
use super::{Direction, Event, EventKind, IntegratorConfig, OrbitTrace, Sample, Termination};
use crate::error::{Error, Result};
use crate::model::{l_of_k, PhasePoint, SigmaParams};

const MAX_STEPS: usize = 5_000_000;

/// Final inside sample of a trace ending on the singular axis sits at `|k| = INSIDE_LEVEL * k_switch`.
const INSIDE_LEVEL: f64 = 1e-8;

/// Extra stopping conditions on top of those in [`IntegratorConfig`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StopRule {
    /// Stop at the n-th crossing of `alpha = 0` (a start on the section does not count).
    pub sections: Option<usize>,
}

/// `|k|` below which the desingularized chart is used.
pub fn k_switch(params: &SigmaParams) -> f64 {
    if !params.singular_at_zero() {
        return 0.0;
    }
    // magnitude of the formal k_c2 root, real or not
    let i = f64::from(params.i());
    let scale = (i * params.sigma_tilde() / f64::from(2 * params.n() + params.i() - 1)).abs();
    (0.05 * scale.powf(1.0 / i)).max(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Chart {
    /// Independent variable is `dir * s`.
    Arc,
    /// Independent variable is `orient * tau` with `ds = k^(i-1) dtau`.
    Tau { orient: f64 },
}

struct System {
    b: f64,
    line: f64,
    null: f64,
    ip: i32,
    dir: f64,
    singular: bool,
    params: SigmaParams,
}

impl System {
    fn new(params: &SigmaParams, dir: Direction) -> Self {
        System {
            b: params.sigma_tilde(),
            line: params.line_coeff(),
            null: params.null_coeff(),
            ip: params.i() as i32,
            dir: dir.sign(),
            singular: params.singular_at_zero(),
            params: *params,
        }
    }

    /// `sigma_tilde - line_coeff k^i`, zeroed at roundoff level so the
    /// invariant lines stay exactly invariant.
    fn line_gap(&self, k: f64) -> f64 {
        let ki = self.line * k.powi(self.ip);
        let w = self.b - ki;
        if w.abs() <= 16.0 * f64::EPSILON * (self.b.abs() + ki.abs()) {
            0.0
        } else {
            w
        }
    }

    fn arc_field(&self, y: &State) -> Result<State, ()> {
        let (a, k) = (y[0], y[1]);
        let l = l_of_k(&self.params, k).map_err(|_| ())?;
        let dk = if self.params.c() != 0.0 && self.line_gap(k) == 0.0 { 0.0 } else { (l - 2.0 * k) * a };
        let da = k * k - a * a - k * l;
        let r2 = a * a + k * k;
        let dt = if r2 > 0.0 { -k / r2 } else { 0.0 };
        let d = self.dir;
        let out = [d * da, d * dk, d, d * dt];
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(())
        }
    }

    fn tau_field(&self, y: &State, orient: f64) -> Result<State, ()> {
        let (a, k) = (y[0], y[1]);
        let km1 = k.powi(self.ip - 1);
        let dk = self.line_gap(k) * a;
        let da = self.null * km1 * k * k - km1 * a * a - self.b * k;
        let r2 = a * a + k * k;
        let dt = if r2 > 0.0 { -km1 * k / r2 } else { 0.0 };
        let out = [orient * da, orient * dk, orient * km1, orient * dt];
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(())
        }
    }

    fn field(&self, chart: Chart, y: &State) -> Result<State, ()> {
        match chart {
            Chart::Arc => self.arc_field(y),
            Chart::Tau { orient } => self.tau_field(y, orient),
        }
    }

    /// `|(dalpha/ds, dk/ds)|` from a chart derivative.
    fn arc_speed(&self, chart: Chart, y: &State, f: &State) -> f64 {
        let speed = f[0].hypot(f[1]);
        match chart {
            Chart::Arc => speed,
            Chart::Tau { .. } => speed / y[1].powi(self.ip - 1).abs(),
        }
    }

    fn tau_orient(&self, k: f64) -> f64 {
        if (self.ip - 1) % 2 == 1 && k < 0.0 {
            -self.dir
        } else {
            self.dir
        }
    }

    /// Sign-equivalent of `dalpha/ds` that stays finite near `k = 0`.
    fn nullcline_gap(&self, y: &State) -> f64 {
        let (a, k) = (y[0], y[1]);
        if self.singular {
            let km1 = k.powi(self.ip - 1);
            self.null * km1 * k * k - km1 * a * a - self.b * k
        } else {
            let l = l_of_k(&self.params, k).unwrap_or(f64::NAN);
            k * k - a * a - k * l
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Watch {
    Section,
    AlphaAxis,
    Nullcline,
    SMax,
}

fn crossed(g0: f64, g1: f64) -> bool {
    g0 != 0.0 && (g1 == 0.0 || g0.signum() != g1.signum())
}

fn sample_of(y: &State) -> Sample {
    Sample { s: y[2], alpha: y[0], k: y[1], t: y[3] }
}

/// Integrate from `start` until `s_max`, box escape, blow-up or a terminal event.
pub fn integrate(params: &SigmaParams, start: PhasePoint, cfg: &IntegratorConfig, direction: Direction) -> Result<OrbitTrace> {
    integrate_with(params, start, cfg, direction, StopRule::default())
}

pub fn integrate_with(
    params: &SigmaParams,
    start: PhasePoint,
    cfg: &IntegratorConfig,
    direction: Direction,
    stop: StopRule,
) -> Result<OrbitTrace> {
    cfg.validate()?;
    let start = PhasePoint::new(start.alpha, start.k)?;
    params.check_k(start.k)?;
    Integrator::new(params, cfg, direction, stop).run(start)
}

struct Integrator<'a> {
    sys: System,
    cfg: &'a IntegratorConfig,
    stop: StopRule,
    ks: f64,
    direction: Direction,
    samples: Vec<Sample>,
    events: Vec<Event>,
}

impl<'a> Integrator<'a> {
    fn new(params: &SigmaParams, cfg: &'a IntegratorConfig, direction: Direction, stop: StopRule) -> Self {
        Integrator {
            sys: System::new(params, direction),
            cfg,
            stop,
            ks: k_switch(params),
            direction,
            samples: Vec::new(),
            events: Vec::new(),
        }
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Integration { reason: reason.into(), last: self.samples.last().copied() }
    }

    fn watch_value(&self, w: Watch, y: &State) -> f64 {
        match w {
            Watch::Section => y[0],
            Watch::AlphaAxis => y[1],
            Watch::Nullcline => self.sys.nullcline_gap(y),
            Watch::SMax => self.cfg.s_max - self.sys.dir * y[2],
        }
    }

    fn watch_tol(&self, w: Watch, y: &State) -> f64 {
        match w {
            Watch::Section | Watch::AlphaAxis => 1e-3 * self.cfg.section_tol,
            Watch::Nullcline => 1e-3 * self.cfg.section_tol * (1.0 + y[0] * y[0] + y[1] * y[1]),
            Watch::SMax => 1e-13 * self.cfg.s_max,
        }
    }

    /// Refines the crossing of `w` inside the accepted step `(y0, h)` by
    /// Illinois-modified regula falsi on the step length.
    fn locate(&self, w: Watch, chart: Chart, y0: &State, f0: &State, h: f64, y1: &State) -> Result<State> {
        self.locate_root(&|y: &State| self.watch_value(w, y), &|y: &State| self.watch_tol(w, y), chart, y0, f0, h, y1)
    }

    #[allow(clippy::too_many_arguments)]
    fn locate_root(
        &self,
        g: &dyn Fn(&State) -> f64,
        tol: &dyn Fn(&State) -> f64,
        chart: Chart,
        y0: &State,
        f0: &State,
        h: f64,
        y1: &State,
    ) -> Result<State> {
        let (mut a, mut ga) = (0.0, g(y0));
        let (mut b, mut gb) = (h, g(y1));
        let mut best = *y1;
        let mut side = 0i8;
        for _ in 0..200 {
            let mut m = (a * gb - b * ga) / (gb - ga);
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let ym = dp5_step(&|y: &State| self.sys.field(chart, y), y0, f0, m)
                .map_err(|_| self.fail("field undefined while locating an event"))?
                .y;
            let gm = g(&ym);
            best = ym;
            if gm.abs() <= tol(&ym) || b - a <= 4.0 * f64::EPSILON * h {
                break;
            }
            if gm.signum() == ga.signum() {
                a = m;
                ga = gm;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            } else {
                b = m;
                gb = gm;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            }
        }
        Ok(best)
    }

    fn initial_chart(&self, k: f64) -> Chart {
        if self.sys.singular && k.abs() < self.ks {
            Chart::Tau { orient: self.sys.tau_orient(k) }
        } else {
            Chart::Arc
        }
    }

    fn finish(self, termination: Termination) -> OrbitTrace {
        OrbitTrace { direction: self.direction, samples: self.samples, events: self.events, termination }
    }

    fn run(mut self, start: PhasePoint) -> Result<OrbitTrace> {
        let cfg = self.cfg;
        let mut y: State = [start.alpha, start.k, 0.0, 0.0];
        let mut chart = self.initial_chart(start.k);
        let mut f0 = self.sys.field(chart, &y).map_err(|_| self.fail("field undefined at start"))?;
        self.samples.push(sample_of(&y));
        let mut h = cfg.max_step.min(1e-3);
        let mut sections = 0usize;
        let watches = [Watch::Section, Watch::AlphaAxis, Watch::Nullcline, Watch::SMax];

        for _ in 0..MAX_STEPS {
            let floor = 1e-13 * y[0].abs().max(y[1].abs()).max(1.0);
            if h < floor {
                return Err(self.fail(format!("step size {h:e} fell below the floor {floor:e}")));
            }
            if chart == Chart::Arc {
                // land on s_max instead of leaving a sliver step behind
                let remaining = self.watch_value(Watch::SMax, &y);
                if h > remaining || remaining - h < 1e-3 * h {
                    h = remaining;
                }
            }
            let step = match dp5_step(&|q: &State| self.sys.field(chart, q), &y, &f0, h) {
                Ok(st) if st.y.iter().all(|v| v.is_finite()) => st,
                _ => {
                    h *= 0.25;
                    continue;
                }
            };
            let en = error_norm(&y, &step.y, &step.err, 3, cfg.rel_tol, cfg.abs_tol);
            if en.is_nan() || en > 1.0 {
                let shrink = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.25 };
                h *= shrink;
                continue;
            }

            let mut hits: Vec<(f64, Watch, State)> = Vec::new();
            for w in watches {
                if crossed(self.watch_value(w, &y), self.watch_value(w, &step.y)) {
                    let at = self.locate(w, chart, &y, &f0, h, &step.y)?;
                    // order by progress along s
                    hits.push((self.sys.dir * at[2], w, at));
                }
            }
            hits.sort_by(|p, q| p.0.total_cmp(&q.0));
            for (_, w, at) in hits {
                let ev = |kind| Event { kind, s: at[2], alpha: at[0], k: at[1] };
                match w {
                    Watch::Section => {
                        self.events.push(ev(EventKind::KAxis));
                        sections += 1;
                        if self.stop.sections.is_some_and(|n| sections >= n) {
                            self.samples.push(sample_of(&at));
                            return Ok(self.finish(Termination::SectionLimit));
                        }
                    }
                    Watch::AlphaAxis => {
                        let mut e = ev(EventKind::AlphaAxis);
                        if self.sys.singular {
                            // keep one refined sample just inside the axis
                            let side = y[1].signum();
                            let level = INSIDE_LEVEL * self.ks;
                            if y[1].abs() > level {
                                let g = |q: &State| q[1] - side * level;
                                let tol = |_: &State| 1e-3 * level;
                                let inner = self.locate_root(&g, &tol, chart, &y, &f0, h, &step.y)?;
                                self.samples.push(sample_of(&inner));
                            }
                            e.k = 0.0;
                            self.events.push(e);
                            trace!("terminal alpha-axis event at s = {}", at[2]);
                            return Ok(self.finish(Termination::AlphaAxis));
                        }
                        self.events.push(e);
                    }
                    Watch::Nullcline => self.events.push(ev(EventKind::Nullcline)),
                    Watch::SMax => {
                        let mut end = sample_of(&at);
                        end.s = self.sys.dir * cfg.s_max;
                        self.events.push(Event { s: end.s, ..ev(EventKind::Truncation) });
                        self.samples.push(end);
                        return Ok(self.finish(Termination::SMax));
                    }
                }
            }

            y = step.y;
            f0 = step.f_new;
            self.samples.push(sample_of(&y));
            if self.watch_value(Watch::SMax, &y) <= self.watch_tol(Watch::SMax, &y) {
                // reached s_max up to roundoff
                let end = self.samples.last_mut().expect("just pushed");
                end.s = self.sys.dir * cfg.s_max;
                self.events.push(Event { kind: EventKind::Truncation, s: end.s, alpha: y[0], k: y[1] });
                return Ok(self.finish(Termination::SMax));
            }
            let grow = if en > 0.0 { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
            h = (h * grow).min(cfg.max_step);

            if y[0].hypot(y[1]) > cfg.box_bound {
                self.events.push(Event { kind: EventKind::Truncation, s: y[2], alpha: y[0], k: y[1] });
                return Ok(self.finish(Termination::BoxEscape));
            }
            let speed = self.sys.arc_speed(chart, &y, &f0);
            match chart {
                Chart::Arc => {
                    let near_axis = y[1].abs() < self.ks;
                    // a blow-up driven by l (not by alpha) means k is approaching the singular axis
                    let l_driven = l_of_k(&self.sys.params, y[1]).is_ok_and(|l| l.abs() > y[0].abs());
                    if self.sys.singular && (near_axis || (speed > cfg.blowup_threshold && l_driven)) {
                        chart = Chart::Tau { orient: self.sys.tau_orient(y[1]) };
                        h = (h / y[1].powi(self.sys.ip - 1).abs()).min(cfg.max_step);
                        f0 = self.sys.field(chart, &y).map_err(|_| self.fail("field undefined at chart switch"))?;
                        debug!("switched to tau chart at s = {}, k = {}", y[2], y[1]);
                    } else if speed > cfg.blowup_threshold {
                        self.events.push(Event { kind: EventKind::Truncation, s: y[2], alpha: y[0], k: y[1] });
                        return Ok(self.finish(Termination::BlowUp));
                    }
                }
                Chart::Tau { .. } => {
                    if y[1].abs() > 2.0 * self.ks && speed < 0.1 * cfg.blowup_threshold {
                        chart = Chart::Arc;
                        h = (h * y[1].powi(self.sys.ip - 1).abs()).min(cfg.max_step);
                        f0 = self.sys.field(chart, &y).map_err(|_| self.fail("field undefined at chart switch"))?;
                        debug!("switched to arc chart at s = {}, k = {}", y[2], y[1]);
                    }
                }
            }
        }
        Err(self.fail(format!("exceeded {MAX_STEPS} steps")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::closed_form_c0;
    use crate::model::critical_k;

    fn params(n: u32, i: u32, c: f64) -> SigmaParams {
        SigmaParams::new(n, i, c).unwrap()
    }

    fn pt(alpha: f64, k: f64) -> PhasePoint {
        PhasePoint { alpha, k }
    }

    #[test]
    fn c0_axis_matches_closed_form() {
        let p = params(2, 1, 0.0);
        let cfg = IntegratorConfig { s_max: 10.0, ..Default::default() };
        let tr = integrate(&p, pt(1.0, 0.0), &cfg, Direction::Forward).unwrap();
        assert_eq!(tr.termination, Termination::SMax);
        assert!((tr.last().s - 10.0).abs() < 1e-9);
        for smp in &tr.samples {
            assert_eq!(smp.k, 0.0);
            let exact = closed_form_c0(1.0, smp.s).unwrap();
            assert!((smp.alpha - exact.alpha).abs() < 1e-8);
        }
    }

    #[test]
    fn periodic_section_return_is_mirrored() {
        let p = params(2, 1, 4.0);
        let cfg = IntegratorConfig::default();
        let stop = StopRule { sections: Some(1) };
        let fwd = integrate_with(&p, pt(0.0, 2.0), &cfg, Direction::Forward, stop).unwrap();
        let bwd = integrate_with(&p, pt(0.0, 2.0), &cfg, Direction::Backward, stop).unwrap();
        let (kf, kb) = (fwd.last().k, bwd.last().k);
        assert!(kf < 4.0 / 3.0 && kf > 1.0, "return k {kf}");
        assert!((kf - kb).abs() < 1e-6);
        assert!(fwd.last().alpha.abs() < 1e-9);
        for (a, b) in fwd.samples.iter().zip(&bwd.samples) {
            assert!((a.alpha + b.alpha).abs() < 1e-7 && (a.k - b.k).abs() < 1e-7);
        }
    }

    #[test]
    fn backward_traces_decrease_in_s() {
        let p = params(2, 1, 4.0);
        let cfg = IntegratorConfig { s_max: 3.0, ..Default::default() };
        let tr = integrate(&p, pt(0.2, 2.0), &cfg, Direction::Backward).unwrap();
        assert!(tr.samples.windows(2).all(|w| w[1].s < w[0].s));
        assert!((tr.last().s + 3.0).abs() < 1e-9);
    }

    #[test]
    fn arc_reaches_alpha_axis_in_tau_chart() {
        let p = params(2, 3, 1.0);
        let kc2 = critical_k(&p).k_c2_pos.unwrap();
        let tr = integrate(&p, pt(0.0, 0.5 * kc2), &IntegratorConfig::default(), Direction::Forward).unwrap();
        assert_eq!(tr.termination, Termination::AlphaAxis);
        let end = tr.terminal_event().unwrap();
        assert_eq!(end.k, 0.0);
        assert!(end.s.is_finite() && end.s > 0.0);
        assert!(tr.last().k > 0.0);
    }

    #[test]
    fn stationary_points_do_not_move() {
        let p = params(2, 1, 4.0);
        let cfg = IntegratorConfig { s_max: 5.0, ..Default::default() };
        for start in [pt(0.0, 0.0), pt(0.0, 4.0 / 3.0)] {
            let tr = integrate(&p, start, &cfg, Direction::Forward).unwrap();
            let moved = tr.samples.iter().map(|s| (s.alpha - start.alpha).abs() + (s.k - start.k).abs()).fold(0.0, f64::max);
            assert!(moved < 1e-12);
        }
    }

    #[test]
    fn invariant_line_is_exact() {
        for (n, i, c) in [(2, 1, 4.0), (2, 3, 1.0), (2, 2, 6.0)] {
            let p = params(n, i, c);
            let cv = critical_k(&p);
            for kc in cv.k_c2_roots() {
                let cfg = IntegratorConfig { s_max: 50.0, ..Default::default() };
                let tr = integrate(&p, pt(0.0, kc), &cfg, Direction::Forward).unwrap();
                assert!(tr.samples.iter().all(|s| (s.k - kc).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn rejects_singular_start() {
        let p = params(2, 2, 1.0);
        assert!(matches!(integrate(&p, pt(1.0, 0.0), &IntegratorConfig::default(), Direction::Forward), Err(Error::Singularity { .. })));
        let bad = IntegratorConfig { rel_tol: 1e-16, ..Default::default() };
        assert!(integrate(&p, pt(1.0, 1.0), &bad, Direction::Forward).is_err());
    }

    #[test]
    fn traces_are_deterministic() {
        let p = params(2, 2, 6.0);
        let cfg = IntegratorConfig { s_max: 20.0, ..Default::default() };
        let a = integrate(&p, pt(0.4, 2.0), &cfg, Direction::Forward).unwrap();
        let b = integrate(&p, pt(0.4, 2.0), &cfg, Direction::Forward).unwrap();
        assert_eq!(a, b);
    }
}
