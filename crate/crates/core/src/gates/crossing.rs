use chrono::{DateTime, Duration, Utc};

use super::{Gate, GateCrossing};
use crate::geo::{orient, LocalFrame};
use crate::ingest::Trip;

/// Tolerance on the gate parameter, so a chord through a gate vertex is not
/// lost to rounding in the intersection point.
const PARAM_EPS: f64 = 1e-12;

/// Crossings of `gate` by the chords of `trip`, in time order.
///
/// A chord crosses when its endpoints lie on opposite sides of a gate piece's
/// supporting line and the intersection lies on the piece (closed at the
/// gate's ends, half-open at interior vertices). A waypoint exactly on the
/// line is placed on the side opposite to where the trip goes next, so it
/// crosses with the sign of the following chord, and a touch-and-return
/// produces a +/- pair.
pub fn detect_crossings(trip: &Trip, gate: &Gate) -> Vec<GateCrossing> {
    let n = trip.waypoints.len();
    if n < 2 || gate.line.len() < 2 {
        return Vec::new();
    }
    let frame = LocalFrame::new(gate.line[0]);
    let g: Vec<[f64; 2]> = gate.line.iter().map(|&p| frame.project(p)).collect();
    let w: Vec<[f64; 2]> = trip.waypoints.iter().map(|wp| frame.project(wp.pos)).collect();

    let (gmin, gmax) = bbox(&g);
    let touches = |a: [f64; 2], b: [f64; 2]| {
        a[0].min(b[0]) <= gmax[0] && a[0].max(b[0]) >= gmin[0] && a[1].min(b[1]) <= gmax[1] && a[1].max(b[1]) >= gmin[1]
    };
    if !w.windows(2).any(|c| touches(c[0], c[1])) {
        return Vec::new();
    }

    let mut out: Vec<GateCrossing> = Vec::new();
    let pieces = g.len() - 1;
    let mut o = vec![0.0; n];
    for k in 0..pieces {
        let (g0, g1) = (g[k], g[k + 1]);
        let last_piece = k + 1 == pieces;
        for (i, p) in w.iter().enumerate() {
            o[i] = orient(g0, g1, *p);
        }
        let sides = effective_sides(&o);
        let d = [g1[0] - g0[0], g1[1] - g0[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        for i in 0..n - 1 {
            let (sa, sb) = (sides[i], sides[i + 1]);
            if sa == 0 || sa == sb || !touches(w[i], w[i + 1]) {
                continue;
            }
            let s = if o[i] == 0.0 {
                0.0
            } else if o[i + 1] == 0.0 {
                1.0
            } else {
                o[i] / (o[i] - o[i + 1])
            };
            let x = [w[i][0] + s * (w[i + 1][0] - w[i][0]), w[i][1] + s * (w[i + 1][1] - w[i][1])];
            let u = ((x[0] - g0[0]) * d[0] + (x[1] - g0[1]) * d[1]) / len2;
            let on_piece = u >= -PARAM_EPS && (u < 1.0 - PARAM_EPS || (last_piece && u <= 1.0 + PARAM_EPS));
            if !on_piece {
                continue;
            }
            out.push(GateCrossing {
                trip_id: trip.trip_id.clone(),
                gate_id: gate.gate_id.clone(),
                t: lerp_time(trip.waypoints[i].t, trip.waypoints[i + 1].t, s),
                sign: if sa > 0 { 1 } else { -1 },
            });
        }
    }
    if pieces > 1 {
        out.sort_by_key(|c| c.t);
    }
    out
}

/// Side of each point (+1 left, -1 right). Points on the line take the
/// opposite of the next off-line point's side, or the previous one's side at
/// the end of the trip; 0 when every point is on the line.
fn effective_sides(o: &[f64]) -> Vec<i8> {
    let sign = |v: f64| if v > 0.0 { 1 } else { -1 };
    let mut sides = vec![0i8; o.len()];
    let mut next_side = 0i8;
    for i in (0..o.len()).rev() {
        if o[i] != 0.0 {
            next_side = sign(o[i]);
            sides[i] = next_side;
        } else {
            sides[i] = -next_side;
        }
    }
    let mut prev_side = 0i8;
    for i in 0..o.len() {
        if o[i] != 0.0 {
            prev_side = sign(o[i]);
        } else if sides[i] == 0 {
            sides[i] = prev_side;
        }
    }
    sides
}

pub(crate) fn lerp_time(a: DateTime<Utc>, b: DateTime<Utc>, s: f64) -> DateTime<Utc> {
    let span = (b - a).num_microseconds().unwrap_or(0) as f64;
    a + Duration::microseconds((s * span).round() as i64)
}

fn bbox(pts: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
