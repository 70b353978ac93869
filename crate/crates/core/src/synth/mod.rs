//! Synthetic scenarios with known ground truth: demand, route choice under a
//! detour model, probe sampling and station counts.
//!
//! Departures per origin-destination pair and day follow a homogeneous
//! Poisson process inside a local-time window, scaled by a weekday or weekend
//! multiplier. Every trip gets its own random stream derived from the seed,
//! the day, the pair and its index, so output does not depend on scheduling.

pub mod case_studies;
mod io;
mod trajectory;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use chrono::{DateTime, Datelike, Days, NaiveDate, Timelike, Utc, Weekday};
use chrono_tz::Tz;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CountRecord, DailyCountSeries, DayCount, Trip, VehicleClass};
use crate::network::{NetworkError, NodeIx, RoadNetwork, SegIx};
use crate::timefmt::{parse_tz, DEFAULT_TZ};

pub use io::{read_truth, write_truth};
pub use trajectory::{sample_waypoints, PathLine};
pub(crate) use trajectory::{fnv1a, round_ms, seconds, sub_rng};

/// Class code for passenger records emitted next to station passes.
pub const PASSENGER_CLASS_CODE: u16 = 2;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("no route from {origin} to {destination}")]
    Unreachable { origin: String, destination: String },
    #[error("detour model needs an alternate route for {origin} -> {destination}")]
    MissingAlternate { origin: String, destination: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn one() -> f64 {
    1.0
}
fn one_day() -> u32 {
    1
}
fn default_tz() -> String {
    DEFAULT_TZ.to_string()
}
fn default_period() -> f64 {
    30.0
}
fn default_speed() -> f64 {
    25.0
}
fn day_end() -> f64 {
    24.0
}
fn cmv_code() -> u16 {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Fixture name (see [`crate::fixtures::named`]) or network file path.
    pub network: String,
    pub start_date: NaiveDate,
    #[serde(default = "one_day")]
    pub days: u32,
    #[serde(default = "default_tz")]
    pub tz: String,
    pub od_pairs: Vec<OdPair>,
    #[serde(default)]
    pub detour_model: DetourModel,
    #[serde(default)]
    pub stations: Vec<StationSpec>,
    #[serde(default = "one")]
    pub penetration: f64,
    #[serde(default)]
    pub noise_sigma_m: f64,
    #[serde(default = "default_period")]
    pub waypoint_period_s: f64,
    #[serde(default = "default_speed")]
    pub speed_mps: f64,
    #[serde(default = "one")]
    pub weekday_multiplier: f64,
    #[serde(default = "one")]
    pub weekend_multiplier: f64,
    #[serde(default = "cmv_code")]
    pub cmv_class_code: u16,
    /// Mean passenger records per truck pass at each station.
    #[serde(default)]
    pub passenger_per_cmv: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdPair {
    pub origin: String,
    pub destination: String,
    pub trips_per_day: f64,
    /// Departure window in local hours, `[start, end)`.
    #[serde(default)]
    pub window_start_hour: f64,
    #[serde(default = "day_end")]
    pub window_end_hour: f64,
    /// Label of the shortest-path route; defaults to `origin->destination`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub alternates: Vec<AlternateRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternateRoute {
    pub label: String,
    /// Nodes the route must visit in order.
    pub via: Vec<String>,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetourModel {
    #[default]
    None,
    /// During the local-hour windows, each trip takes an alternate (chosen by
    /// weight) with `avoidance_probability`.
    EnforcementHours {
        windows: Vec<[f64; 2]>,
        avoidance_probability: f64,
    },
    /// Inside a period, routes listed in `route_speeds_mps` compete by travel
    /// time with logit weights `exp(-T / choice_scale_s)`.
    RampControl {
        periods: Vec<SpeedPeriod>,
        choice_scale_s: f64,
    },
    /// Trips departing in `[start, end)` avoid the closed segments.
    Closure {
        segments: Vec<String>,
        #[serde(with = "crate::timefmt::utc")]
        start: DateTime<Utc>,
        #[serde(with = "crate::timefmt::utc")]
        end: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedPeriod {
    #[serde(with = "crate::timefmt::utc")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::timefmt::utc")]
    pub end: DateTime<Utc>,
    pub route_speeds_mps: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub station_id: String,
    pub segment_id: String,
}

/// Generator bookkeeping for one trip of the full population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrip {
    pub trip_id: String,
    #[serde(with = "crate::timefmt::utc")]
    pub departure: DateTime<Utc>,
    pub route_label: String,
    pub detour: bool,
    pub probe: bool,
    pub path: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SynthOutput {
    /// Probe trips only.
    pub trips: Vec<Trip>,
    /// Every generated trip, probe or not.
    pub truth: Vec<TruthTrip>,
    pub counts: Vec<CountRecord>,
    /// True truck passes per station and local day over the whole scenario.
    pub truth_daily: Vec<DailyCountSeries>,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        serde_json::from_str(text).map_err(|e| SynthError::Spec(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(m));
        if !(self.penetration > 0.0 && self.penetration <= 1.0) {
            return bad(format!("penetration must be in (0, 1], got {}", self.penetration));
        }
        if !(self.waypoint_period_s > 0.0) || !(self.speed_mps > 0.0) {
            return bad("waypoint_period_s and speed_mps must be positive".into());
        }
        if !(self.noise_sigma_m >= 0.0) || !(self.passenger_per_cmv >= 0.0) {
            return bad("noise_sigma_m and passenger_per_cmv must be non-negative".into());
        }
        if !(self.weekday_multiplier >= 0.0 && self.weekend_multiplier >= 0.0) {
            return bad("demand multipliers must be non-negative".into());
        }
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        parse_tz(&self.tz).map_err(SynthError::Spec)?;
        for od in &self.od_pairs {
            if !(od.trips_per_day >= 0.0) {
                return bad(format!("{} -> {}: trips_per_day must be non-negative", od.origin, od.destination));
            }
            if !(0.0 <= od.window_start_hour && od.window_start_hour < od.window_end_hour && od.window_end_hour <= 24.0) {
                return bad(format!("{} -> {}: invalid departure window", od.origin, od.destination));
            }
            if od.alternates.iter().any(|a| !(a.weight > 0.0)) {
                return bad("alternate weights must be positive".into());
            }
        }
        match &self.detour_model {
            DetourModel::None => {}
            DetourModel::EnforcementHours {
                windows,
                avoidance_probability,
            } => {
                if !(0.0..=1.0).contains(avoidance_probability) {
                    return bad(format!("avoidance_probability must be in [0, 1], got {avoidance_probability}"));
                }
                if windows.iter().any(|w| !(0.0 <= w[0] && w[0] < w[1] && w[1] <= 24.0)) {
                    return bad("enforcement windows must satisfy 0 <= start < end <= 24".into());
                }
            }
            DetourModel::RampControl { periods, choice_scale_s } => {
                if !(*choice_scale_s > 0.0) {
                    return bad("choice_scale_s must be positive".into());
                }
                for p in periods {
                    if p.start >= p.end {
                        return bad("speed period start must precede end".into());
                    }
                    if p.route_speeds_mps.values().any(|v| !(*v > 0.0)) {
                        return bad("route speeds must be positive".into());
                    }
                }
            }
            DetourModel::Closure { start, end, .. } => {
                if start >= end {
                    return bad("closure start must precede end".into());
                }
            }
        }
        Ok(())
    }

    pub fn load_network(&self) -> Result<RoadNetwork, SynthError> {
        if let Some(net) = crate::fixtures::named(&self.network) {
            return Ok(net);
        }
        if !std::path::Path::new(&self.network).exists() {
            return Err(SynthError::Spec(format!(
                "network {:?} is neither a fixture name nor an existing file",
                self.network
            )));
        }
        Ok(RoadNetwork::load(PathBuf::from(&self.network))?)
    }
}

struct Route {
    label: String,
    path: Vec<SegIx>,
    length_m: f64,
    weight: f64,
}

struct OdRoutes {
    primary: Route,
    alternates: Vec<Route>,
    /// Route around closed segments, when the primary uses one.
    closure: Option<Route>,
}

impl OdRoutes {
    fn by_label(&self, label: &str) -> Option<&Route> {
        std::iter::once(&self.primary)
            .chain(&self.alternates)
            .find(|r| r.label == label)
    }
}

fn route_via(net: &RoadNetwork, stops: &[NodeIx], blocked: &dyn Fn(SegIx) -> bool) -> Option<Vec<SegIx>> {
    let mut path = Vec::new();
    for w in stops.windows(2) {
        let (_, leg) = net.node_route(w[0], w[1], blocked)?;
        path.extend(leg);
    }
    Some(path)
}

fn build_routes(net: &RoadNetwork, spec: &ScenarioSpec) -> Result<Vec<OdRoutes>, SynthError> {
    let closed: HashSet<SegIx> = match &spec.detour_model {
        DetourModel::Closure { segments, .. } => segments
            .iter()
            .map(|s| net.require_seg(s))
            .collect::<Result<_, _>>()?,
        _ => HashSet::new(),
    };
    let open = |_: SegIx| false;
    spec.od_pairs
        .iter()
        .map(|od| {
            let o = net.require_node(&od.origin)?;
            let d = net.require_node(&od.destination)?;
            let unreachable = || SynthError::Unreachable {
                origin: od.origin.clone(),
                destination: od.destination.clone(),
            };
            if o == d {
                return Err(SynthError::Spec(format!("origin equals destination ({})", od.origin)));
            }
            let make = |label: String, path: Vec<SegIx>, weight: f64| Route {
                length_m: net.path_length_m(&path),
                label,
                path,
                weight,
            };
            let primary_path = route_via(net, &[o, d], &open).ok_or_else(unreachable)?;
            let primary = make(
                od.label.clone().unwrap_or_else(|| format!("{}->{}", od.origin, od.destination)),
                primary_path,
                1.0,
            );
            let mut alternates = Vec::new();
            for a in &od.alternates {
                let mut stops = vec![o];
                for v in &a.via {
                    stops.push(net.require_node(v)?);
                }
                stops.push(d);
                let path = route_via(net, &stops, &open).ok_or_else(unreachable)?;
                alternates.push(make(a.label.clone(), path, a.weight));
            }
            let closure = if primary.path.iter().any(|s| closed.contains(s)) {
                let blocked = |s: SegIx| closed.contains(&s);
                let path = route_via(net, &[o, d], &blocked).ok_or_else(unreachable)?;
                let label = alternates
                    .iter()
                    .find(|a| a.path == path)
                    .map(|a| a.label.clone())
                    .unwrap_or_else(|| format!("{} (closure detour)", primary.label));
                Some(make(label, path, 1.0))
            } else {
                None
            };
            let routes = OdRoutes {
                primary,
                alternates,
                closure,
            };
            let missing = || SynthError::MissingAlternate {
                origin: od.origin.clone(),
                destination: od.destination.clone(),
            };
            match &spec.detour_model {
                DetourModel::EnforcementHours {
                    avoidance_probability,
                    ..
                } if *avoidance_probability > 0.0 && routes.alternates.is_empty() => return Err(missing()),
                DetourModel::RampControl { periods, .. } => {
                    for p in periods {
                        if p.route_speeds_mps.keys().any(|l| routes.by_label(l).is_none()) {
                            return Err(missing());
                        }
                    }
                }
                _ => {}
            }
            Ok(routes)
        })
        .collect()
}

fn local_hour(t: DateTime<Utc>, tz: Tz) -> f64 {
    let l = t.with_timezone(&tz);
    l.hour() as f64 + l.minute() as f64 / 60.0 + l.second() as f64 / 3600.0
}

fn local_midnight(date: NaiveDate, tz: Tz) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_local_timezone(tz)
        .earliest()
        .expect("local midnight exists")
        .with_timezone(&Utc)
}

struct Generated {
    departure: DateTime<Utc>,
    key: (u32, usize, u64),
    label: String,
    detour: bool,
    probe: bool,
    path: Vec<SegIx>,
    speed_mps: f64,
    trip: Option<Trip>,
    weight_lb: u32,
    passengers: Vec<u64>,
}

/// Draws the route, speed and probe flag for one trip.
fn simulate_trip(
    net: &RoadNetwork,
    spec: &ScenarioSpec,
    tz: Tz,
    routes: &OdRoutes,
    departure: DateTime<Utc>,
    key: (u32, usize, u64),
) -> Generated {
    let mut rng = sub_rng(&[spec.seed, key.0 as u64, key.1 as u64, key.2]);
    let u_route: f64 = rng.random();
    let mut route = &routes.primary;
    let mut speed = spec.speed_mps;
    match &spec.detour_model {
        DetourModel::None => {}
        DetourModel::EnforcementHours {
            windows,
            avoidance_probability,
        } => {
            let h = local_hour(departure, tz);
            if windows.iter().any(|w| w[0] <= h && h < w[1]) && u_route < *avoidance_probability {
                // reuse the draw, rescaled to [0, 1), to pick the alternate
                let v = u_route / avoidance_probability;
                let total: f64 = routes.alternates.iter().map(|a| a.weight).sum();
                let mut acc = 0.0;
                route = routes.alternates.last().expect("alternates checked");
                for a in &routes.alternates {
                    acc += a.weight / total;
                    if v < acc {
                        route = a;
                        break;
                    }
                }
            }
        }
        DetourModel::RampControl { periods, choice_scale_s } => {
            if let Some(p) = periods.iter().find(|p| p.start <= departure && departure < p.end) {
                let options: Vec<(&Route, f64)> = p
                    .route_speeds_mps
                    .iter()
                    .map(|(l, &v)| (routes.by_label(l).expect("labels checked"), v))
                    .collect();
                let tmin = options.iter().map(|(r, v)| r.length_m / v).fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = options
                    .iter()
                    .map(|(r, v)| (-(r.length_m / v - tmin) / choice_scale_s).exp())
                    .collect();
                let total: f64 = w.iter().sum();
                let mut acc = 0.0;
                for (i, (r, v)) in options.iter().enumerate() {
                    acc += w[i] / total;
                    if u_route < acc || i + 1 == options.len() {
                        route = r;
                        speed = *v;
                        break;
                    }
                }
            }
        }
        DetourModel::Closure { start, end, .. } => {
            if *start <= departure && departure < *end {
                if let Some(c) = &routes.closure {
                    route = c;
                }
            }
        }
    }
    let probe = rng.random::<f64>() < spec.penetration;
    let weight_lb = rng.random_range(20_000..80_000);
    let passengers: Vec<u64> = if spec.passenger_per_cmv > 0.0 {
        let pois = Poisson::new(spec.passenger_per_cmv).expect("positive mean");
        spec.stations.iter().map(|_| pois.sample(&mut rng) as u64).collect()
    } else {
        vec![0; spec.stations.len()]
    };
    let trip = probe.then(|| {
        let line = PathLine::new(net, &route.path);
        Trip {
            trip_id: String::new(),
            vehicle_class: VehicleClass::Cmv,
            waypoints: sample_waypoints(
                &line,
                departure,
                speed,
                spec.waypoint_period_s,
                spec.noise_sigma_m,
                &mut rng,
            ),
        }
    });
    Generated {
        departure,
        key,
        label: route.label.clone(),
        detour: !std::ptr::eq(route, &routes.primary),
        probe,
        path: route.path.clone(),
        speed_mps: speed,
        trip,
        weight_lb,
        passengers,
    }
}

/// Runs a scenario. Identical specs give identical output.
pub fn generate(spec: &ScenarioSpec) -> Result<SynthOutput, SynthError> {
    let net = spec.load_network()?;
    generate_on(&net, spec)
}

/// [`generate`] on an already loaded network.
pub fn generate_on(net: &RoadNetwork, spec: &ScenarioSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let tz = parse_tz(&spec.tz).map_err(SynthError::Spec)?;
    let routes = build_routes(net, spec)?;
    let station_segs: Vec<SegIx> = spec
        .stations
        .iter()
        .map(|s| net.require_seg(&s.segment_id))
        .collect::<Result<_, _>>()?;

    let blocks: Vec<(u32, usize)> = (0..spec.days)
        .flat_map(|d| (0..spec.od_pairs.len()).map(move |i| (d, i)))
        .collect();
    let mut generated: Vec<Generated> = blocks
        .par_iter()
        .flat_map_iter(|&(d, i)| {
            let od = &spec.od_pairs[i];
            let date = spec.start_date + Days::new(d as u64);
            let mult = match date.weekday() {
                Weekday::Sat | Weekday::Sun => spec.weekend_multiplier,
                _ => spec.weekday_multiplier,
            };
            let lambda = od.trips_per_day * mult;
            let mut rng = sub_rng(&[spec.seed, d as u64, i as u64, u64::MAX]);
            let n = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive mean").sample(&mut rng) as u64
            } else {
                0
            };
            let midnight = local_midnight(date, tz);
            let lo = midnight + seconds(od.window_start_hour * 3600.0);
            let span_ms = ((od.window_end_hour - od.window_start_hour) * 3_600_000.0) as i64;
            let mut deps: Vec<DateTime<Utc>> = (0..n)
                .map(|_| lo + chrono::Duration::milliseconds(rng.random_range(0..span_ms)))
                .collect();
            deps.sort();
            let routes = &routes[i];
            deps.into_iter()
                .enumerate()
                .map(move |(k, dep)| simulate_trip(net, spec, tz, routes, dep, (d, i, k as u64)))
                .collect::<Vec<_>>()
        })
        .collect();
    generated.sort_by(|a, b| a.departure.cmp(&b.departure).then(a.key.cmp(&b.key)));

    let mut out = SynthOutput::default();
    let mut per_station: Vec<BTreeMap<NaiveDate, u64>> = vec![BTreeMap::new(); spec.stations.len()];
    let last_date = spec.start_date + Days::new(spec.days as u64 - 1);
    for m in &mut per_station {
        for d in 0..spec.days {
            m.insert(spec.start_date + Days::new(d as u64), 0);
        }
    }
    for (n, g) in generated.into_iter().enumerate() {
        let trip_id = format!("T{:07}", n + 1);
        if !station_segs.is_empty() {
            let line = PathLine::new(net, &g.path);
            for (si, (st, &seg)) in spec.stations.iter().zip(&station_segs).enumerate() {
                for (pi, _) in g.path.iter().enumerate().filter(|(_, &s)| s == seg) {
                    let mid = 0.5 * (line.segment_start(pi) + line.segment_start(pi + 1));
                    let t = round_ms(g.departure + seconds(mid / g.speed_mps));
                    let local = t.with_timezone(&tz).date_naive();
                    if local >= spec.start_date && local <= last_date {
                        *per_station[si].entry(local).or_insert(0) += 1;
                    }
                    let extra = |speed_mph: f64, weight: u32| {
                        vec![
                            ("weight_lb".to_string(), weight.to_string()),
                            ("speed_mph".to_string(), format!("{speed_mph:.1}")),
                        ]
                    };
                    out.counts.push(CountRecord {
                        station_id: st.station_id.clone(),
                        t,
                        class: spec.cmv_class_code,
                        extra: extra(g.speed_mps * 2.236_936, g.weight_lb),
                    });
                    for j in 0..g.passengers[si] {
                        out.counts.push(CountRecord {
                            station_id: st.station_id.clone(),
                            t: t + chrono::Duration::seconds(j as i64 + 1),
                            class: PASSENGER_CLASS_CODE,
                            extra: extra(g.speed_mps * 2.236_936, 3_500),
                        });
                    }
                }
            }
        }
        out.truth.push(TruthTrip {
            trip_id: trip_id.clone(),
            departure: round_ms(g.departure),
            route_label: g.label,
            detour: g.detour,
            probe: g.probe,
            path: g.path.iter().map(|&s| net.segment(s).id.clone()).collect(),
        });
        if let Some(mut trip) = g.trip {
            trip.trip_id = trip_id;
            out.trips.push(trip);
        }
    }
    out.counts
        .sort_by(|a, b| (&a.station_id, a.t, a.class).cmp(&(&b.station_id, b.t, b.class)));
    out.truth_daily = spec
        .stations
        .iter()
        .zip(per_station)
        .map(|(st, m)| DailyCountSeries {
            station_id: st.station_id.clone(),
            timezone: spec.tz.clone(),
            days: m.into_iter().map(|(date, count)| DayCount { date, count }).collect(),
        })
        .collect();
    Ok(out)
}

/// Drops each interior waypoint independently with probability `drop_rate`;
/// first and last waypoints are kept. Deterministic in `seed` and trip id.
pub fn degrade(trips: &[Trip], drop_rate: f64, seed: u64) -> Vec<Trip> {
    assert!((0.0..1.0).contains(&drop_rate), "drop_rate must be in [0, 1)");
    trips
        .iter()
        .map(|t| {
            let mut rng = sub_rng(&[seed, fnv1a(&t.trip_id)]);
            let n = t.waypoints.len();
            let waypoints = t
                .waypoints
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let keep_draw = rng.random::<f64>() >= drop_rate;
                    *i == 0 || *i + 1 == n || keep_draw
                })
                .map(|(_, w)| *w)
                .collect();
            Trip {
                trip_id: t.trip_id.clone(),
                vehicle_class: t.vehicle_class,
                waypoints,
            }
        })
        .collect()
}
