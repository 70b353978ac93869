//! Directed gates, study areas and gate-sequence trip queries.
//!
//! A gate is a polyline drawn in some direction. A chord between consecutive
//! waypoints that moves from the left side of the gate to its right side is a
//! positive crossing (`sign = +1`); right-to-left is negative. A gate drawn
//! west-to-east therefore counts southbound traffic as positive, and a gate
//! drawn south-to-north counts eastbound traffic as positive.
//!
//! Geometry is evaluated in a tangent plane anchored at the gate's first
//! point (for gates) or the ring's first point (for study areas).

mod area;
mod crossing;
mod document;
mod filter;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{point_along, polyline_length_m, LocalFrame, LonLat};
use crate::network::Segment;

pub use area::StudyArea;
pub use crossing::detect_crossings;
pub use document::{CompiledQuery, QueryDocument};
pub use filter::{filter_trips, TripSet, TripSetEntry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("unknown gate id {0}")]
    UnknownGate(String),
    #[error("duplicate gate id {0}")]
    DuplicateGate(String),
    #[error("gate {0} is degenerate (needs >= 2 points and positive length)")]
    DegenerateGate(String),
    #[error("invalid study area: {0}")]
    InvalidStudyArea(String),
    #[error("gate sequence is empty")]
    EmptySequence,
    #[error("time window start must precede end")]
    InvalidWindow,
    #[error("gate sign must be +1 or -1, got {0}")]
    InvalidSign(i8),
    #[error("invalid query document: {0}")]
    Parse(String),
    #[error("invalid query parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub gate_id: String,
    pub line: Vec<LonLat>,
}

impl Gate {
    pub fn new(gate_id: impl Into<String>, line: Vec<LonLat>) -> Result<Self, GateError> {
        let gate = Self {
            gate_id: gate_id.into(),
            line,
        };
        gate.validate()?;
        Ok(gate)
    }

    /// A straight gate across the middle of a segment, `half_width_m` to each
    /// side, drawn so that travel along the segment is a `+1` crossing.
    pub fn across_segment(gate_id: impl Into<String>, seg: &Segment, half_width_m: f64) -> Self {
        let mid = seg.length_m / 2.0;
        let step = (seg.length_m / 4.0).min(1.0);
        let a = point_along(&seg.geometry, mid - step);
        let b = point_along(&seg.geometry, mid + step);
        let c = point_along(&seg.geometry, mid);
        let frame = LocalFrame::new(c);
        let (pa, pb) = (frame.project(a), frame.project(b));
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
        // left normal of the travel direction
        let n = [-d[1] / norm * half_width_m, d[0] / norm * half_width_m];
        Self {
            gate_id: gate_id.into(),
            line: vec![frame.unproject([-n[0], -n[1]]), frame.unproject(n)],
        }
    }

    pub fn validate(&self) -> Result<(), GateError> {
        if self.line.len() < 2
            || !self.line.iter().all(LonLat::is_valid)
            || !(polyline_length_m(&self.line) > 0.0)
        {
            return Err(GateError::DegenerateGate(self.gate_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCrossing {
    pub trip_id: String,
    pub gate_id: String,
    #[serde(with = "crate::timefmt::utc")]
    pub t: DateTime<Utc>,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRequirement {
    pub gate_id: String,
    pub sign: i8,
}

/// Half-open `[start, end)` UTC interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    #[serde(with = "crate::timefmt::utc")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt::utc")]
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripQuery {
    pub study_area: Option<StudyArea>,
    pub gate_sequence: Vec<GateRequirement>,
    pub time_window: Option<TimeWindow>,
    pub require_order: bool,
    pub vehicle_class: Option<crate::ingest::VehicleClass>,
}

impl TripQuery {
    pub fn validate(&self) -> Result<(), GateError> {
        if self.gate_sequence.is_empty() {
            return Err(GateError::EmptySequence);
        }
        if let Some(r) = self.gate_sequence.iter().find(|r| r.sign != 1 && r.sign != -1) {
            return Err(GateError::InvalidSign(r.sign));
        }
        if let Some(w) = &self.time_window {
            if w.start >= w.end {
                return Err(GateError::InvalidWindow);
            }
        }
        Ok(())
    }
}
