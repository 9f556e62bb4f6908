//! Adaptive integration of the phase flow, event location, and orbit classification.

mod classify;
mod closed_form;
mod integrate;
pub(crate) mod rk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhasePoint;

pub use classify::{classify_orbit, half_period, OrbitClass};
pub use closed_form::{closed_form_c0, closed_form_line};
pub use integrate::{integrate, integrate_with, k_switch, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub s_max: f64,
    /// Escape radius in the `(alpha, k)` plane.
    pub box_bound: f64,
    /// Field magnitude treated as a blow-up.
    pub blowup_threshold: f64,
    /// Residual to which section crossings are refined.
    pub section_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.01,
            s_max: 200.0,
            box_bound: 1e6,
            blowup_threshold: 1e8,
            section_tol: 1e-9,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("s_max", self.s_max),
            ("box_bound", self.box_bound),
            ("blowup_threshold", self.blowup_threshold),
            ("section_tol", self.section_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if self.rel_tol < 1e-14 {
            return Err(Error::domain("rel_tol must be >= 1e-14"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// One accepted point of a trace.
///
/// `t` is the height of the leaf center, integrated from `dt/ds = -k / (alpha^2 + k^2)`
/// and gauged to zero at the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub alpha: f64,
    pub k: f64,
    pub t: f64,
}

impl Sample {
    pub fn point(&self) -> PhasePoint {
        PhasePoint { alpha: self.alpha, k: self.k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// `alpha = 0`, the Poincaré section.
    KAxis,
    /// `k = 0`.
    AlphaAxis,
    /// `dalpha/ds = 0`.
    Nullcline,
    Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub s: f64,
    pub alpha: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    SMax,
    BoxEscape,
    BlowUp,
    /// Reached `k = 0` where `l` is singular.
    AlphaAxis,
    /// Stopped after the requested number of section crossings.
    SectionLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::SMax => "s_max reached",
            Termination::BoxEscape => "left the bounding box",
            Termination::BlowUp => "field blow-up",
            Termination::AlphaAxis => "reached the alpha-axis",
            Termination::SectionLimit => "section limit",
        }
    }
}

/// A sampled solution curve.
///
/// Samples are in integration order, so `s` increases for forward traces and
/// decreases for backward ones. Terminal events on the singular `alpha`-axis
/// appear in `events` only; the last sample stays strictly inside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTrace {
    pub direction: Direction,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl OrbitTrace {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trace has at least its start sample")
    }

    pub fn sections(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::KAxis)
    }

    /// The terminal event, if the trace ended on one.
    pub fn terminal_event(&self) -> Option<&Event> {
        match self.termination {
            Termination::AlphaAxis | Termination::SectionLimit => self.events.last(),
            _ => None,
        }
    }

    /// `s` at which the trace ends, including a terminal event past the last sample.
    pub fn end_s(&self) -> f64 {
        self.terminal_event().map_or(self.last().s, |e| e.s)
    }
}
