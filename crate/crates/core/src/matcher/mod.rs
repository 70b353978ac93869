//! Conflation of raw trips onto directed road segments.
//!
//! Each waypoint gets a set of candidate segment projections. The most likely
//! candidate sequence is found with a Viterbi pass where emissions decay with
//! the distance from waypoint to candidate (Gaussian, scale
//! `emission_sigma_m`) and transitions decay with the ratio of on-network
//! route length to straight-line waypoint distance. A transition whose route is
//! longer than `max_gap_fill_ratio` times the straight distance between the
//! two snapped positions is not allowed; when no transition into a waypoint is
//! allowed the trip is split there and the piece with the most matched
//! waypoints is kept. Segments traversed between matched waypoints are
//! reported as inferred.

mod io;

use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::distance_m;
use crate::ingest::Trip;
use crate::network::{NodeIx, RoadNetwork, SearchTree, SegIx, SegmentProjection};

pub use io::{parse_matched, read_matched, write_matched};

/// Weight of the route/straight-line ratio in the transition log-likelihood.
const TRANSITION_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    pub candidate_radius_m: f64,
    pub max_gap_fill_ratio: f64,
    pub min_waypoints: usize,
    pub emission_sigma_m: f64,
    /// Candidates kept per waypoint.
    pub max_candidates: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            candidate_radius_m: 50.0,
            max_gap_fill_ratio: 1.5,
            min_waypoints: 2,
            emission_sigma_m: 15.0,
            max_candidates: 8,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.candidate_radius_m > 0.0
            && self.max_gap_fill_ratio > 0.0
            && self.min_waypoints > 0
            && self.emission_sigma_m > 0.0
            && self.max_candidates > 0;
        if ok {
            Ok(())
        } else {
            Err(format!("match parameters must all be positive: {self:?}"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub segment_id: String,
    #[serde(with = "crate::timefmt::utc")]
    pub entry_time: DateTime<Utc>,
    #[serde(with = "crate::timefmt::utc")]
    pub exit_time: DateTime<Utc>,
    pub inferred: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTrip {
    pub trip_id: String,
    pub path: Vec<PathStep>,
    pub unmatched_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooFewWaypoints,
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub trip_id: String,
    pub reason: RejectReason,
}

/// Per-waypoint Viterbi column.
struct Column {
    wp: usize,
    cands: Vec<SegmentProjection>,
    score: Vec<f64>,
    back: Vec<Option<(usize, Move)>>,
}

#[derive(Debug, Clone)]
enum Move {
    /// Same segment, not moving backwards beyond tolerance.
    Stay,
    /// Leave the current segment, traverse `mid`, enter the next candidate's segment.
    Route(Vec<SegIx>),
}

fn emission(d: f64, sigma: f64) -> f64 {
    -0.5 * (d / sigma).powi(2)
}

pub fn match_trip(trip: &Trip, net: &RoadNetwork, params: &MatchParams) -> Result<MatchedTrip, Rejection> {
    let reject = |reason| Rejection {
        trip_id: trip.trip_id.clone(),
        reason,
    };
    let n = trip.waypoints.len();
    if n < params.min_waypoints.max(2) {
        return Err(reject(RejectReason::TooFewWaypoints));
    }

    let mut pieces: Vec<Vec<Column>> = Vec::new();
    let mut current: Vec<Column> = Vec::new();
    for (wp, w) in trip.waypoints.iter().enumerate() {
        let mut cands = net.project_nearby(w.pos, params.candidate_radius_m, params.max_candidates);
        if cands.is_empty() {
            continue;
        }
        cands.sort_by_key(|c| c.seg);
        let emit: Vec<f64> = cands
            .iter()
            .map(|c| emission(c.distance_m, params.emission_sigma_m))
            .collect();
        let column = match current.last() {
            None => Column {
                wp,
                score: emit,
                back: vec![None; cands.len()],
                cands,
            },
            Some(prev) => {
                let d_gc = distance_m(trip.waypoints[prev.wp].pos, w.pos);
                let (trans, back) = transitions(net, prev, &cands, d_gc, params);
                if back.iter().all(Option::is_none) {
                    pieces.push(std::mem::take(&mut current));
                    Column {
                        wp,
                        score: emit,
                        back: vec![None; cands.len()],
                        cands,
                    }
                } else {
                    Column {
                        wp,
                        score: trans.iter().zip(&emit).map(|(t, e)| t + e).collect(),
                        back,
                        cands,
                    }
                }
            }
        };
        current.push(column);
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    let Some(best_piece) = pieces
        .into_iter()
        .reduce(|best, p| if p.len() > best.len() { p } else { best })
    else {
        return Err(reject(RejectReason::NoCandidates));
    };

    Ok(build_path(trip, net, &best_piece, n, params.emission_sigma_m))
}

fn transitions(
    net: &RoadNetwork,
    prev: &Column,
    next: &[SegmentProjection],
    d_gc: f64,
    params: &MatchParams,
) -> (Vec<f64>, Vec<Option<(usize, Move)>>) {
    let ratio = params.max_gap_fill_ratio;
    let slack = params.emission_sigma_m;
    let back_tolerance = params.emission_sigma_m;
    let bound = ratio * (d_gc + 2.0 * params.candidate_radius_m) + slack;
    let norm = d_gc.max(params.emission_sigma_m);
    let mut trees: HashMap<NodeIx, SearchTree> = HashMap::new();

    let mut scores = vec![f64::NEG_INFINITY; next.len()];
    let mut back: Vec<Option<(usize, Move)>> = vec![None; next.len()];
    for (bi, b) in next.iter().enumerate() {
        let mut best: Option<(f64, usize, bool)> = None;
        for (ai, a) in prev.cands.iter().enumerate() {
            if prev.score[ai] == f64::NEG_INFINITY {
                continue;
            }
            let seg_a = net.segment(a.seg);
            let (d_route, stay) = if a.seg == b.seg && b.offset_m + back_tolerance >= a.offset_m {
                ((b.offset_m - a.offset_m).max(0.0), true)
            } else {
                let tree = trees
                    .entry(seg_a.to_node)
                    .or_insert_with(|| net.search(seg_a.to_node, bound, None, &|_| false));
                let Some(mid) = tree.distance(net.segment(b.seg).from_node) else {
                    continue;
                };
                ((seg_a.length_m - a.offset_m) + mid + b.offset_m, false)
            };
            let d_snap = distance_m(a.closest, b.closest);
            if d_route > ratio * d_snap + slack {
                continue;
            }
            let s = prev.score[ai] - TRANSITION_SCALE * d_route / norm;
            if best.is_none_or(|(bs, _, _)| s > bs) {
                best = Some((s, ai, stay));
            }
        }
        if let Some((s, ai, stay)) = best {
            scores[bi] = s;
            let mv = if stay {
                Move::Stay
            } else {
                let from = net.segment(prev.cands[ai].seg).to_node;
                let tree = &trees[&from];
                Move::Route(
                    tree.path_to(net, net.segment(b.seg).from_node)
                        .expect("settled node has a path"),
                )
            };
            back[bi] = Some((ai, mv));
        }
    }
    (scores, back)
}

fn build_path(trip: &Trip, net: &RoadNetwork, piece: &[Column], n_waypoints: usize, end_tolerance_m: f64) -> MatchedTrip {
    // backtrack
    let last = piece.last().expect("non-empty piece");
    let mut state = 0;
    for i in 1..last.score.len() {
        if last.score[i] > last.score[state] {
            state = i;
        }
    }
    let mut states = vec![state; piece.len()];
    let mut moves: Vec<Option<Move>> = vec![None; piece.len()];
    for k in (1..piece.len()).rev() {
        let (prev, mv) = piece[k].back[states[k]].clone().expect("reachable state");
        moves[k] = Some(mv);
        states[k - 1] = prev;
    }

    let mut segs: Vec<(SegIx, bool)> = Vec::new();
    let mut starts: Vec<f64> = Vec::new();
    let mut positions: Vec<f64> = Vec::with_capacity(piece.len());
    let mut end = 0.0;
    let mut push = |segs: &mut Vec<(SegIx, bool)>, starts: &mut Vec<f64>, seg: SegIx, inferred: bool| {
        starts.push(end);
        end += net.segment(seg).length_m;
        segs.push((seg, inferred));
    };
    for (k, col) in piece.iter().enumerate() {
        let c = &col.cands[states[k]];
        match &moves[k] {
            None => push(&mut segs, &mut starts, c.seg, false),
            Some(Move::Stay) => {}
            Some(Move::Route(mid)) => {
                for &m in mid {
                    push(&mut segs, &mut starts, m, true);
                }
                push(&mut segs, &mut starts, c.seg, false);
            }
        }
        let p = starts.last().unwrap() + c.offset_m;
        let p = positions.last().map_or(p, |&prev: &f64| p.max(prev));
        positions.push(p);
    }

    let t0 = trip.waypoints[piece[0].wp].t;
    let times: Vec<f64> = piece
        .iter()
        .map(|c| (trip.waypoints[c.wp].t - t0).num_microseconds().unwrap_or(0) as f64 / 1e3)
        .collect();
    let at = |x: f64| -> DateTime<Utc> {
        let ms = interpolate_time(&positions, &times, x);
        t0 + Duration::milliseconds(ms.round() as i64)
    };
    // A trip that starts or ends on a node touches every segment there; drop
    // end steps the vehicle covers less than the tolerance of.
    let (first_pos, last_pos) = (positions[0], *positions.last().unwrap());
    let mut lo = 0;
    let mut hi = segs.len();
    while hi - lo > 1 && starts[lo] + net.segment(segs[lo].0).length_m <= first_pos + end_tolerance_m {
        lo += 1;
    }
    while hi - lo > 1 && starts[hi - 1] >= last_pos - end_tolerance_m {
        hi -= 1;
    }
    let path = segs[lo..hi]
        .iter()
        .zip(&starts[lo..hi])
        .map(|(&(seg, inferred), &start)| {
            let s = net.segment(seg);
            PathStep {
                segment_id: s.id.clone(),
                entry_time: at(start),
                exit_time: at(start + s.length_m),
                inferred,
            }
        })
        .collect();
    MatchedTrip {
        trip_id: trip.trip_id.clone(),
        path,
        unmatched_fraction: 1.0 - piece.len() as f64 / n_waypoints as f64,
    }
}

/// Time (ms since the first matched waypoint) at which position `x` along the
/// path is reached; linear between bracketing waypoints, clamped at the ends.
fn interpolate_time(positions: &[f64], times: &[f64], x: f64) -> f64 {
    if x <= positions[0] {
        return times[0];
    }
    let last = positions.len() - 1;
    if x >= positions[last] {
        return times[last];
    }
    let k = positions.partition_point(|&p| p < x);
    let (p0, p1) = (positions[k - 1], positions[k]);
    times[k - 1] + (x - p0) / (p1 - p0) * (times[k] - times[k - 1])
}

/// Matches every trip; results keep input order whatever the thread pool size.
pub fn match_corpus(
    trips: &[Trip],
    net: &RoadNetwork,
    params: &MatchParams,
) -> (Vec<MatchedTrip>, Vec<Rejection>) {
    let results: Vec<Result<MatchedTrip, Rejection>> =
        trips.par_iter().map(|t| match_trip(t, net, params)).collect();
    let mut matched = Vec::with_capacity(results.len());
    let mut rejected = Vec::new();
    for r in results {
        match r {
            Ok(m) => matched.push(m),
            Err(e) => rejected.push(e),
        }
    }
    (matched, rejected)
}
