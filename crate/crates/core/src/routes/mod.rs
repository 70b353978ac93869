//! Route signatures between gates and their folding into labelled route sets.

mod fold;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::TripSetEntry;
use crate::matcher::MatchedTrip;
use crate::network::RoadNetwork;

pub use fold::{fold_routes, label_route, label_routes, similarity, RouteSet, DEFAULT_THETA};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("trip {trip_id}: matched path does not overlap the gate crossing window")]
    EmptyClip { trip_id: String },
    #[error("trip {trip_id}: unknown segment {segment_id}")]
    UnknownSegment { trip_id: String, segment_id: String },
    #[error("fold threshold must be in (0, 1], got {0}")]
    InvalidTheta(f64),
}

/// A matched path clipped to the stretch between a trip's first and last
/// qualifying gate crossings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSignature {
    pub trip_id: String,
    pub segs: Vec<String>,
    pub seg_lengths_m: Vec<f64>,
    pub length_m: f64,
}

impl RouteSignature {
    pub fn from_segments(trip_id: &str, segs: &[&str], net: &RoadNetwork) -> Result<Self, RouteError> {
        let mut lengths = Vec::with_capacity(segs.len());
        for id in segs {
            let ix = net.seg_ix(id).ok_or_else(|| RouteError::UnknownSegment {
                trip_id: trip_id.to_string(),
                segment_id: id.to_string(),
            })?;
            lengths.push(net.segment(ix).length_m);
        }
        Ok(Self {
            trip_id: trip_id.to_string(),
            segs: segs.iter().map(|s| s.to_string()).collect(),
            length_m: lengths.iter().sum(),
            seg_lengths_m: lengths,
        })
    }
}

/// Keeps the path steps whose `[entry, exit]` interval intersects
/// `[first crossing, last crossing]`.
pub fn extract_signature(
    mt: &MatchedTrip,
    entry: &TripSetEntry,
    net: &RoadNetwork,
) -> Result<RouteSignature, RouteError> {
    let (lo, hi) = (entry.first_crossing(), entry.last_crossing());
    let segs: Vec<&str> = mt
        .path
        .iter()
        .filter(|s| s.entry_time <= hi && s.exit_time >= lo)
        .map(|s| s.segment_id.as_str())
        .collect();
    if segs.is_empty() {
        return Err(RouteError::EmptyClip {
            trip_id: mt.trip_id.clone(),
        });
    }
    RouteSignature::from_segments(&mt.trip_id, &segs, net)
}

/// Diagnostics for trips that passed the gate filter but produced no
/// signature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SignatureDiagnostics {
    /// Passed the filter but the matcher rejected the trip.
    pub unmatched: Vec<String>,
    /// Matched path and crossing window do not overlap.
    pub empty_clip: Vec<String>,
}

/// Signatures for every trip-set entry that has a matched path, in trip-set
/// order.
pub fn extract_signatures(
    entries: &[TripSetEntry],
    matched: &[MatchedTrip],
    net: &RoadNetwork,
) -> Result<(Vec<RouteSignature>, SignatureDiagnostics), RouteError> {
    let by_id: HashMap<&str, &MatchedTrip> = matched.iter().map(|m| (m.trip_id.as_str(), m)).collect();
    let mut sigs = Vec::with_capacity(entries.len());
    let mut diag = SignatureDiagnostics::default();
    for e in entries {
        let Some(mt) = by_id.get(e.trip_id.as_str()) else {
            diag.unmatched.push(e.trip_id.clone());
            continue;
        };
        match extract_signature(mt, e, net) {
            Ok(s) => sigs.push(s),
            Err(RouteError::EmptyClip { trip_id }) => diag.empty_clip.push(trip_id),
            Err(other) => return Err(other),
        }
    }
    Ok((sigs, diag))
}
