//! Shared corpus builders for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{DateTime, NaiveDate, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripgate::gates::{detect_crossings, Gate};
use tripgate::geo::{LocalFrame, LonLat};
use tripgate::ingest::Trip;
use tripgate::network::RoadNetwork;
use tripgate::synth::{DetourModel, OdPair, ScenarioSpec};

/// Random origin-destination pairs between nodes at least `min_m` apart
/// (straight line), each with `rate` expected trips per day.
pub fn random_pairs(net: &RoadNetwork, n: usize, rate: f64, min_m: f64, max_m: f64, seed: u64) -> Vec<OdPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = net.nodes();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = nodes.choose(&mut rng).unwrap();
        let b = nodes.choose(&mut rng).unwrap();
        let d = tripgate::geo::distance_m(a.pos, b.pos);
        if d < min_m || d > max_m {
            continue;
        }
        out.push(OdPair {
            origin: a.id.clone(),
            destination: b.id.clone(),
            trips_per_day: rate,
            window_start_hour: 6.0,
            window_end_hour: 20.0,
            label: None,
            alternates: Vec::new(),
        });
    }
    out
}

pub fn spec(network: &str, date: &str, od_pairs: Vec<OdPair>, sigma: f64, period: f64, speed: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        network: network.into(),
        start_date: date.parse::<NaiveDate>().unwrap(),
        days: 1,
        tz: "America/New_York".into(),
        od_pairs,
        detour_model: DetourModel::None,
        stations: Vec::new(),
        penetration: 1.0,
        noise_sigma_m: sigma,
        waypoint_period_s: period,
        speed_mps: speed,
        weekday_multiplier: 1.0,
        weekend_multiplier: 1.0,
        cmv_class_code: 9,
        passenger_per_cmv: 0.0,
        seed,
    }
}

/// A random straight or bent gate inside the network's bounding box.
pub fn random_gate(net: &RoadNetwork, id: &str, rng: &mut impl Rng) -> Gate {
    let (lo, hi) = bbox(net);
    let frame = LocalFrame::new(lo);
    let span = frame.project(hi);
    let pieces = rng.random_range(1..=3);
    let mut p = [rng.random_range(0.0..span[0]), rng.random_range(0.0..span[1])];
    let mut line = vec![frame.unproject(p)];
    for _ in 0..pieces {
        let len = rng.random_range(200.0..1500.0);
        let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        p = [p[0] + len * ang.cos(), p[1] + len * ang.sin()];
        line.push(frame.unproject(p));
    }
    Gate::new(id, line).unwrap()
}

pub fn bbox(net: &RoadNetwork) -> (LonLat, LonLat) {
    let mut lo = LonLat::new(f64::INFINITY, f64::INFINITY);
    let mut hi = LonLat::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in net.nodes() {
        lo = LonLat::new(lo.lon.min(n.pos.lon), lo.lat.min(n.pos.lat));
        hi = LonLat::new(hi.lon.max(n.pos.lon), hi.lat.max(n.pos.lat));
    }
    (lo, hi)
}

/// Crossings found by solving every chord against every gate piece as a
/// 2x2 linear system. Returns (sign, t) per trip, sorted by time.
pub fn oracle_crossings(trip: &Trip, gate: &Gate) -> Vec<(i8, DateTime<Utc>)> {
    let frame = LocalFrame::new(gate.line[0]);
    let g: Vec<[f64; 2]> = gate.line.iter().map(|&p| frame.project(p)).collect();
    let w: Vec<[f64; 2]> = trip.waypoints.iter().map(|x| frame.project(x.pos)).collect();
    let mut out = Vec::new();
    for i in 0..w.len().saturating_sub(1) {
        let (p, r) = (w[i], [w[i + 1][0] - w[i][0], w[i + 1][1] - w[i][1]]);
        let mut hits: Vec<(f64, i8)> = Vec::new();
        for k in 0..g.len() - 1 {
            let (q, s) = (g[k], [g[k + 1][0] - g[k][0], g[k + 1][1] - g[k][1]]);
            let den = r[0] * s[1] - r[1] * s[0];
            if den == 0.0 {
                continue;
            }
            let qp = [q[0] - p[0], q[1] - p[1]];
            let t = (qp[0] * s[1] - qp[1] * s[0]) / den;
            let u = (qp[0] * r[1] - qp[1] * r[0]) / den;
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                // chord direction crossed with gate direction: positive when
                // travelling from the gate's left to its right
                let sign = if s[0] * r[1] - s[1] * r[0] < 0.0 { 1 } else { -1 };
                hits.push((t, sign));
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (ta, tb) = (trip.waypoints[i].t, trip.waypoints[i + 1].t);
        let span = (tb - ta).num_microseconds().unwrap() as f64;
        for (t, sign) in hits {
            out.push((sign, ta + chrono::Duration::microseconds((t * span).round() as i64)));
        }
    }
    out
}

pub fn detected(trip: &Trip, gate: &Gate) -> Vec<(i8, DateTime<Utc>)> {
    detect_crossings(trip, gate).into_iter().map(|c| (c.sign, c.t)).collect()
}

/// Share of non-inferred matched steps whose segment is on the generating path.
pub fn path_agreement(
    matched: &[tripgate::matcher::MatchedTrip],
    truth: &BTreeMap<String, Vec<String>>,
) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for m in matched {
        let path = &truth[&m.trip_id];
        for s in m.path.iter().filter(|s| !s.inferred) {
            total += 1;
            if path.contains(&s.segment_id) {
                agree += 1;
            }
        }
    }
    (agree, total)
}
