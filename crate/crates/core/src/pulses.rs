//! Piecewise global drive schedules.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::cz_time;

pub const X_AXIS: f64 = 0.0;
pub const Y_AXIS: f64 = FRAC_PI_2;

/// Width of the preparation pulse in both presets (us).
pub const PREP_WIDTH: f64 = 0.2;
/// Width of the Bell measurement pulse (us).
pub const BELL_MEASURE_WIDTH: f64 = 0.5;
/// Width of the graph measurement pulse (us).
pub const GRAPH_MEASURE_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Prep,
    Hold,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSegment {
    pub label: Label,
    pub shape: Shape,
    pub duration: f64,
    pub omega_max: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<PulseSegment>,
}

impl Shape {
    pub fn as_str(&self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::Triangle => "triangle",
        }
    }
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Prep => "prep",
            Label::Hold => "hold",
            Label::Measure => "measure",
        }
    }
}

impl PulseSegment {
    pub fn new(label: Label, shape: Shape, duration: f64, omega_max: f64, phi: f64) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::Schedule(format!("segment duration must be >= 0, got {duration}")));
        }
        if !omega_max.is_finite() || omega_max < 0.0 {
            return Err(Error::Schedule(format!("peak Rabi rate must be >= 0, got {omega_max}")));
        }
        if !phi.is_finite() {
            return Err(Error::Schedule("non-finite phase".into()));
        }
        if label == Label::Hold && omega_max != 0.0 {
            return Err(Error::Schedule("hold segments carry no drive".into()));
        }
        Ok(PulseSegment { label, shape, duration, omega_max, phi })
    }

    /// Segment rotating every atom by `angle` about the in-plane axis at
    /// `axis`; negative angles flip the phase by pi so the drive stays >= 0.
    pub fn rotation(label: Label, shape: Shape, duration: f64, angle: f64, axis: f64) -> Result<Self> {
        if duration <= 0.0 {
            return Err(Error::Schedule(format!("rotation needs a positive duration, got {duration}")));
        }
        let phi = if angle < 0.0 { axis + PI } else { axis };
        let omega = match shape {
            Shape::Square => angle.abs() / duration,
            Shape::Triangle => 2.0 * angle.abs() / duration,
        };
        PulseSegment::new(label, shape, duration, omega, phi)
    }

    pub fn hold(duration: f64) -> Result<Self> {
        PulseSegment::new(Label::Hold, Shape::Square, duration, 0.0, 0.0)
    }

    pub fn rotation_angle(&self) -> f64 {
        self.area(0.0, self.duration)
    }

    /// Drive amplitude at local time `t` in [0, duration].
    pub fn omega_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        match self.shape {
            Shape::Square => self.omega_max,
            Shape::Triangle => {
                let h = self.duration / 2.0;
                if t <= h {
                    self.omega_max * t / h
                } else {
                    self.omega_max * (2.0 - t / h)
                }
            }
        }
    }

    fn cumulative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.duration);
        let w = self.duration;
        let om = self.omega_max;
        if w == 0.0 {
            return 0.0;
        }
        match self.shape {
            Shape::Square => om * t,
            Shape::Triangle => {
                if t <= w / 2.0 {
                    om * t * t / w
                } else {
                    om * w / 4.0 + om * (2.0 * (t - w / 2.0) - (t * t - w * w / 4.0) / w)
                }
            }
        }
    }

    /// Exact integral of the envelope between local times `t0` and `t1`.
    pub fn area(&self, t0: f64, t1: f64) -> f64 {
        self.cumulative(t1) - self.cumulative(t0)
    }

    pub fn is_driven(&self) -> bool {
        self.omega_max > 0.0 && self.duration > 0.0
    }
}

pub fn rotation_angle(segment: &PulseSegment) -> f64 {
    segment.rotation_angle()
}

impl PulseSchedule {
    pub fn new(segments: Vec<PulseSegment>) -> Self {
        PulseSchedule { segments }
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Global drive amplitude at time `t`; segment boundaries belong to the
    /// later segment.
    pub fn omega_at(&self, t: f64) -> f64 {
        let mut start = 0.0;
        for s in &self.segments {
            if t >= start && t < start + s.duration {
                return s.omega_at(t - start);
            }
            start += s.duration;
        }
        match self.segments.last() {
            Some(s) if (t - start).abs() < 1e-12 => s.omega_at(s.duration),
            _ => 0.0,
        }
    }

    /// Parses "label shape duration_us omega_max_rad_per_us phi_rad" lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut segs = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: ln + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(err("expected `label shape duration omega_max phi`".into()));
            }
            let label = match f[0] {
                "prep" => Label::Prep,
                "hold" => Label::Hold,
                "measure" => Label::Measure,
                o => return Err(err(format!("unknown label `{o}`"))),
            };
            let shape = match f[1] {
                "square" => Shape::Square,
                "triangle" => Shape::Triangle,
                o => return Err(err(format!("unknown shape `{o}`"))),
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
            let seg = PulseSegment::new(label, shape, num(f[2])?, num(f[3])?, num(f[4])?)
                .map_err(|e| err(e.to_string()))?;
            segs.push(seg);
        }
        if segs.is_empty() {
            return Err(Error::Schedule("schedule has no segments".into()));
        }
        Ok(PulseSchedule::new(segs))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for g in &self.segments {
            let _ = writeln!(
                s,
                "{} {} {:.12} {:.12} {:.12}",
                g.label.as_str(),
                g.shape.as_str(),
                g.duration,
                g.omega_max,
                g.phi
            );
        }
        s
    }
}

/// Preparation about x, hold until the CZ time has elapsed, then the
/// measurement rotation about x.
pub fn bell_schedule(d: f64) -> Result<PulseSchedule> {
    let t = cz_time(d)?;
    if t < PREP_WIDTH + BELL_MEASURE_WIDTH {
        return Err(Error::Schedule(format!(
            "cz time {t:.4} us is shorter than the pulse windows ({:.1} us)",
            PREP_WIDTH + BELL_MEASURE_WIDTH
        )));
    }
    Ok(PulseSchedule::new(vec![
        PulseSegment::rotation(Label::Prep, Shape::Triangle, PREP_WIDTH, FRAC_PI_2, X_AXIS)?,
        PulseSegment::hold(t - PREP_WIDTH)?,
        PulseSegment::rotation(Label::Measure, Shape::Triangle, BELL_MEASURE_WIDTH, -5.0 * PI / 4.0, X_AXIS)?,
    ]))
}

pub fn graph_schedule(d: f64) -> Result<PulseSchedule> {
    graph_schedule_with(d, PREP_WIDTH, GRAPH_MEASURE_WIDTH, Shape::Triangle)
}

/// Graph preset with custom pulse widths; the whole run lasts the CZ time.
pub fn graph_schedule_with(d: f64, prep: f64, measure: f64, shape: Shape) -> Result<PulseSchedule> {
    let t = cz_time(d)?;
    if t < prep + measure {
        return Err(Error::Schedule(format!(
            "cz time {t:.4} us is shorter than the pulse windows ({:.4} us)",
            prep + measure
        )));
    }
    Ok(PulseSchedule::new(vec![
        PulseSegment::rotation(Label::Prep, shape, prep, FRAC_PI_2, Y_AXIS)?,
        PulseSegment::hold(t - prep - measure)?,
        PulseSegment::rotation(Label::Measure, shape, measure, -FRAC_PI_2, Y_AXIS)?,
    ]))
}

pub fn preset(name: &str, d: f64) -> Result<PulseSchedule> {
    match name {
        "bell" => bell_schedule(d),
        "graph" => graph_schedule(d),
        o => Err(Error::Schedule(format!("unknown preset `{o}`"))),
    }
}
