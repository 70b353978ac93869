use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detect_crossings, CompiledQuery, Gate, GateCrossing, GateError, TripQuery};
use crate::ingest::Trip;

/// A trip that satisfied a query, with one qualifying crossing per gate in the
/// sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSetEntry {
    pub trip_id: String,
    pub crossings: Vec<GateCrossing>,
    /// Travel-time origin: the last qualifying crossing of the first gate
    /// before the second gate's crossing (the first crossing itself when the
    /// query has one gate or is unordered).
    #[serde(with = "crate::timefmt::utc")]
    pub departure: DateTime<Utc>,
}

impl TripSetEntry {
    pub fn first_crossing(&self) -> DateTime<Utc> {
        self.crossings[0].t
    }

    pub fn last_crossing(&self) -> DateTime<Utc> {
        self.crossings.last().expect("entry has crossings").t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TripSet {
    pub gate_ids: Vec<String>,
    pub entries: Vec<TripSetEntry>,
}

impl TripSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trip_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.trip_id.as_str()).collect()
    }
}

/// Trips passing `query`, in input order. `gates` must contain every gate the
/// sequence references.
pub fn filter_trips(trips: &[Trip], gates: &[Gate], query: &TripQuery) -> Result<TripSet, GateError> {
    query.validate()?;
    let resolved = query
        .gate_sequence
        .iter()
        .map(|r| {
            gates
                .iter()
                .find(|g| g.gate_id == r.gate_id)
                .ok_or_else(|| GateError::UnknownGate(r.gate_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(run(trips, &resolved, query))
}

impl CompiledQuery {
    pub fn filter(&self, trips: &[Trip]) -> TripSet {
        let gates: Vec<&Gate> = self.sequence_gates.iter().collect();
        run(trips, &gates, &self.query)
    }
}

fn run(trips: &[Trip], gates: &[&Gate], query: &TripQuery) -> TripSet {
    let entries = trips
        .par_iter()
        .filter_map(|t| evaluate(t, gates, query))
        .collect();
    TripSet {
        gate_ids: query.gate_sequence.iter().map(|r| r.gate_id.clone()).collect(),
        entries,
    }
}

fn evaluate(trip: &Trip, gates: &[&Gate], query: &TripQuery) -> Option<TripSetEntry> {
    if query.vehicle_class.is_some_and(|c| c != trip.vehicle_class) {
        return None;
    }
    if let Some(area) = &query.study_area {
        if !trip.waypoints.iter().any(|w| area.contains(w.pos)) {
            return None;
        }
    }
    let candidates: Vec<Vec<GateCrossing>> = gates
        .iter()
        .zip(&query.gate_sequence)
        .map(|(g, r)| {
            detect_crossings(trip, g)
                .into_iter()
                .filter(|c| c.sign == r.sign)
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return None;
    }
    let in_window = |t: DateTime<Utc>| query.time_window.is_none_or(|w| w.contains(t));

    let crossings = if query.require_order {
        ordered_chain(&candidates, in_window)?
    } else {
        let first = candidates[0].iter().find(|c| in_window(c.t))?.clone();
        std::iter::once(first)
            .chain(candidates[1..].iter().map(|c| c[0].clone()))
            .collect()
    };
    let departure = if query.require_order && crossings.len() > 1 {
        let next = crossings[1].t;
        candidates[0]
            .iter()
            .filter(|c| c.t < next)
            .map(|c| c.t)
            .next_back()
            .expect("chain start precedes second crossing")
    } else {
        crossings[0].t
    };
    Some(TripSetEntry {
        trip_id: trip.trip_id.clone(),
        crossings,
        departure,
    })
}

/// First chain in time order: each in-window crossing of the first gate is
/// tried in turn and completed greedily with the earliest strictly later
/// crossing of each following gate. If one start cannot be completed, later
/// starts cannot either.
fn ordered_chain(
    candidates: &[Vec<GateCrossing>],
    in_window: impl Fn(DateTime<Utc>) -> bool,
) -> Option<Vec<GateCrossing>> {
    let start = candidates[0].iter().find(|c| in_window(c.t))?;
    let mut chain = vec![start.clone()];
    for next in &candidates[1..] {
        let prev = chain.last().expect("chain is non-empty").t;
        chain.push(next.iter().find(|c| c.t > prev)?.clone());
    }
    Some(chain)
}
