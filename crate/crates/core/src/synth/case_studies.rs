//! Scripted corpora mirroring the three detour studies: a weigh-station
//! bypass with enforcement hours, a congested main line with two parallel
//! arterials, and a before/after share comparison.
//!
//! Trips here are not drawn from a demand model. Each one is placed by hand
//! (route, first-gate time, gate-to-gate duration) so the downstream tables
//! come out at known values; only the waypoint noise is random.

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use chrono_tz::America::New_York;

use super::{round_ms, sample_waypoints, seconds, sub_rng, PathLine, TruthTrip};
use crate::analytics::RouteShareTable;
use crate::fixtures::NetworkBuilder;
use crate::gates::{Gate, GateRequirement, QueryDocument, StudyArea, TimeWindow};
use crate::geo::{LocalFrame, LonLat};
use crate::ingest::{Trip, VehicleClass};
use crate::network::{RoadClass, RoadNetwork, SegIx};

pub const I270: &str = "Eisenhower Memorial Highway, I-270";
pub const TWIS: &str = "Hyattstown South TWIS";
pub const MD27: &str = "Ridge Road, MD-27";
pub const MD28: &str = "Dickerson Road, MD-28";
pub const MD355: &str = "Frederick Road, MD-355";
pub const MD109: &str = "Old Hundred Road, MD-109";

pub const US50: &str = "EB US-50";
pub const SKIDMORE: &str = "EB Skidmore Road";
pub const COLLEGE: &str = "EB College Pkwy";

const ENFORCEMENT_ORIGIN: LonLat = LonLat::new(-77.32, 39.25);
const RAMP_ORIGIN: LonLat = LonLat::new(-76.62, 38.98);

/// A generated corpus with the network it runs on and its queries.
#[derive(Debug)]
pub struct CaseStudy {
    pub name: &'static str,
    pub network: RoadNetwork,
    pub trips: Vec<Trip>,
    pub truth: Vec<TruthTrip>,
    /// Named query documents, in presentation order.
    pub queries: Vec<(String, QueryDocument)>,
}

impl CaseStudy {
    pub fn query(&self, name: &str) -> Option<&QueryDocument> {
        self.queries.iter().find(|(n, _)| n == name).map(|(_, q)| q)
    }
}

/// Main line running south from N0 to S0 with a weigh-station ramp to the
/// east and four bypasses, two on each side. Coordinates in meters.
pub fn enforcement_network() -> RoadNetwork {
    let mut b = NetworkBuilder::new(ENFORCEMENT_ORIGIN);
    for (id, y) in [("N0", 12000.0), ("N", 9000.0), ("A", 8000.0), ("M1", 5000.0), ("B", 2000.0), ("S", 1000.0), ("S0", -2000.0)] {
        b.node(id, 0.0, y);
    }
    let main = ["N0", "N", "A", "M1", "B", "S", "S0"];
    for (k, w) in main.windows(2).enumerate() {
        b.road(&format!("i270-{}", k + 1), w[0], w[1], &[], I270, RoadClass::Motorway, false);
    }
    b.node("T", 300.0, 5000.0);
    b.road("twis-in", "A", "T", &[[300.0, 7500.0]], TWIS, RoadClass::Ramp, true);
    b.road("twis-out", "T", "B", &[[300.0, 2500.0]], TWIS, RoadClass::Ramp, true);
    for (node, x, name, id) in [
        ("D27", -2000.0, MD27, "md27"),
        ("D28", -4000.0, MD28, "md28"),
        ("D355", 2000.0, MD355, "md355"),
        ("D109", 4000.0, MD109, "md109"),
    ] {
        b.node(node, x, 5000.0);
        b.road(&format!("{id}-n"), "A", node, &[[x, 7500.0]], name, RoadClass::Primary, false);
        b.road(&format!("{id}-s"), node, "B", &[[x, 2500.0]], name, RoadClass::Primary, false);
    }
    b.build().expect("enforcement fixture is valid")
}

/// One-way main line W0-P-Q-E0 heading east with two parallel arterials
/// between P and Q, one and two kilometers north.
pub fn ramp_control_network() -> RoadNetwork {
    let mut b = NetworkBuilder::new(RAMP_ORIGIN);
    for (id, x) in [("W0", -4000.0), ("P", 0.0), ("Q", 10000.0), ("E0", 14000.0)] {
        b.node(id, x, 0.0);
    }
    b.road("us50-1", "W0", "P", &[], US50, RoadClass::Motorway, true);
    b.road("us50-2", "P", "Q", &[], US50, RoadClass::Motorway, true);
    b.road("us50-3", "Q", "E0", &[], US50, RoadClass::Motorway, true);
    for (node, y, name, id) in [("SK", 1000.0, SKIDMORE, "skidmore"), ("CO", 2000.0, COLLEGE, "college")] {
        b.node(node, 5000.0, y);
        b.road(&format!("{id}-1"), "P", node, &[[1000.0, y]], name, RoadClass::Secondary, true);
        b.road(&format!("{id}-2"), node, "Q", &[[9000.0, y]], name, RoadClass::Secondary, true);
    }
    b.build().expect("ramp-control fixture is valid")
}

struct Script<'a> {
    net: &'a RoadNetwork,
    frame: LocalFrame,
    gates: Vec<Gate>,
    period_s: f64,
    sigma_m: f64,
    seed: u64,
    trips: Vec<Trip>,
    truth: Vec<TruthTrip>,
}

impl<'a> Script<'a> {
    fn path(&self, stops: &[&str]) -> Vec<SegIx> {
        let mut path = Vec::new();
        for w in stops.windows(2) {
            let a = self.net.node_ix(w[0]).expect("scripted node");
            let b = self.net.node_ix(w[1]).expect("scripted node");
            let (_, leg) = self.net.node_route(a, b, &|_| false).expect("scripted route exists");
            path.extend(leg);
        }
        path
    }

    /// Adds a trip that crosses the first gate at `t_gate` and the last gate
    /// `gate_minutes` later (or at `speed_mps` when no duration is given).
    #[allow(clippy::too_many_arguments)]
    fn add(
        &mut self,
        label: &str,
        detour: bool,
        stops: &[&str],
        t_gate: DateTime<Utc>,
        gate_minutes: Option<f64>,
        speed_mps: f64,
        class: VehicleClass,
    ) {
        let path = self.path(stops);
        let line = PathLine::new(self.net, &path);
        let (g0, g1) = (&self.gates[0], &self.gates[self.gates.len() - 1]);
        let o0 = line.crossing_offset(g0.line[0], g0.line[1]);
        let o1 = line.crossing_offset(g1.line[0], g1.line[1]);
        let speed = match (gate_minutes, o0, o1) {
            (Some(m), Some(a), Some(b)) => (b - a) / (m * 60.0),
            _ => speed_mps,
        };
        let departure = t_gate - seconds(o0.unwrap_or(0.0) / speed);
        let n = self.trips.len() as u64;
        let trip_id = format!("T{:07}", n + 1);
        let mut rng = sub_rng(&[self.seed, n]);
        self.trips.push(Trip {
            trip_id: trip_id.clone(),
            vehicle_class: class,
            waypoints: sample_waypoints(&line, departure, speed, self.period_s, self.sigma_m, &mut rng),
        });
        self.truth.push(TruthTrip {
            trip_id,
            departure: round_ms(departure),
            route_label: label.to_string(),
            detour,
            probe: true,
            path: path.iter().map(|&s| self.net.segment(s).id.clone()).collect(),
        });
    }

    fn gate(&self, id: &str, a: [f64; 2], b: [f64; 2]) -> Gate {
        Gate::new(id, vec![self.frame.unproject(a), self.frame.unproject(b)]).expect("scripted gate")
    }
}

fn local(date: NaiveDate, h: u32, m: u32, s: u32) -> DateTime<Utc> {
    New_York
        .from_local_datetime(&date.and_hms_opt(h, m, s).expect("valid time"))
        .single()
        .expect("unambiguous local time")
        .with_timezone(&Utc)
}

fn sort_by_departure(trips: &mut Vec<Trip>, truth: &mut Vec<TruthTrip>) {
    let mut pairs: Vec<(Trip, TruthTrip)> = trips.drain(..).zip(truth.drain(..)).collect();
    pairs.sort_by(|a, b| (a.1.departure, &a.1.trip_id).cmp(&(b.1.departure, &b.1.trip_id)));
    for (k, (mut t, mut g)) in pairs.into_iter().enumerate() {
        let id = format!("T{:07}", k + 1);
        t.trip_id = id.clone();
        g.trip_id = id;
        trips.push(t);
        truth.push(g);
    }
}

/// Weigh-station enforcement day, 2022-04-11. The trips passing both gates
/// southbound split 552 main line, 21 weigh station, 5/3/3/1 on the four
/// bypasses. Everything off the main line happens in the 08:00 and 15:00
/// local hours; main-line trips fill the other 22 hours.
pub fn case_study_1() -> CaseStudy {
    let net = enforcement_network();
    let frame = LocalFrame::new(ENFORCEMENT_ORIGIN);
    let day = NaiveDate::from_ymd_opt(2022, 4, 11).unwrap();
    let mut s = Script {
        net: &net,
        frame,
        gates: Vec::new(),
        period_s: 30.0,
        sigma_m: 5.0,
        seed: 0x1270,
        trips: Vec::new(),
        truth: Vec::new(),
    };
    let upstream = s.gate("upstream", [-400.0, 8500.0], [400.0, 8500.0]);
    let downstream = s.gate("downstream", [-400.0, 1500.0], [400.0, 1500.0]);
    s.gates = vec![upstream.clone(), downstream.clone()];
    const SPEED: f64 = 25.0;
    let south = ["N0", "S0"];

    let hours: Vec<u32> = (0..24).filter(|h| *h != 8 && *h != 15).collect();
    for k in 0..552u32 {
        let h = hours[(k % 22) as usize];
        let offset = (k / 22) * 130 + 17;
        s.add(I270, false, &south, local(day, h, offset / 60, offset % 60), None, SPEED, VehicleClass::Cmv);
    }
    let active: Vec<(&str, &[&str])> = std::iter::repeat_n((TWIS, &["N0", "T", "S0"][..]), 21)
        .chain(std::iter::repeat_n((MD27, &["N0", "D27", "S0"][..]), 5))
        .chain(std::iter::repeat_n((MD28, &["N0", "D28", "S0"][..]), 3))
        .chain(std::iter::repeat_n((MD355, &["N0", "D355", "S0"][..]), 3))
        .chain(std::iter::repeat_n((MD109, &["N0", "D109", "S0"][..]), 1))
        .collect();
    for (k, (label, stops)) in active.into_iter().enumerate() {
        let h = if k % 2 == 0 { 8 } else { 15 };
        let offset = (k as u32 / 2) * 200 + 40;
        let detour = label != TWIS;
        s.add(label, detour, stops, local(day, h, offset / 60, offset % 60), None, SPEED, VehicleClass::Cmv);
    }
    // outside the query: wrong direction, next day, non-CMV
    for k in 0..10u32 {
        s.add(I270, false, &["S0", "N0"], local(day, 10 + k, 5, 0), None, SPEED, VehicleClass::Cmv);
    }
    let next = day.succ_opt().unwrap();
    for k in 0..5u32 {
        s.add(I270, false, &south, local(next, 9 + k, 20, 0), None, SPEED, VehicleClass::Cmv);
    }
    for k in 0..5u32 {
        s.add(I270, false, &south, local(day, 11 + k, 45, 0), None, SPEED, VehicleClass::Other);
    }

    let area = [[-500.0, 7800.0], [500.0, 7800.0], [500.0, 9200.0], [-500.0, 9200.0], [-500.0, 7800.0]];
    let query = QueryDocument {
        gates: vec![upstream, downstream],
        study_area: Some(StudyArea::new(area.iter().map(|&p| frame.unproject(p)).collect()).expect("area")),
        gate_sequence: vec![
            GateRequirement {
                gate_id: "upstream".into(),
                sign: 1,
            },
            GateRequirement {
                gate_id: "downstream".into(),
                sign: 1,
            },
        ],
        time_window: Some(TimeWindow {
            start: local(day, 0, 0, 0),
            end: local(next, 0, 0, 0),
        }),
        require_order: true,
        vehicle_class: Some(VehicleClass::Cmv),
        fold_theta: None,
        tz: Some("America/New_York".into()),
        hour_bin_minutes: Some(60),
    };
    let (mut trips, mut truth) = (s.trips, s.truth);
    sort_by_departure(&mut trips, &mut truth);
    CaseStudy {
        name: "case-study-1",
        network: net,
        trips,
        truth,
        queries: vec![("enforcement".into(), query)],
    }
}

/// Saturday afternoons before and during on-ramp metering. Gate-to-gate
/// minutes per trip are fixed so the baseline means are 42/16/14 and the
/// control means 25/22.
pub fn case_study_2() -> CaseStudy {
    let net = ramp_control_network();
    let frame = LocalFrame::new(RAMP_ORIGIN);
    let mut s = Script {
        net: &net,
        frame,
        gates: Vec::new(),
        period_s: 30.0,
        sigma_m: 2.0,
        seed: 0x50,
        trips: Vec::new(),
        truth: Vec::new(),
    };
    let west = s.gate("west", [-1500.0, -400.0], [-1500.0, 400.0]);
    let east = s.gate("east", [11500.0, -400.0], [11500.0, 400.0]);
    s.gates = vec![west.clone(), east.clone()];
    let main: &[&str] = &["W0", "E0"];
    let skid: &[&str] = &["W0", "SK", "E0"];
    let college: &[&str] = &["W0", "CO", "E0"];

    let baseline = NaiveDate::from_ymd_opt(2022, 7, 30).unwrap();
    let control = NaiveDate::from_ymd_opt(2022, 8, 6).unwrap();
    let periods: [(NaiveDate, Vec<(&str, &[&str], f64)>); 2] = [
        (
            baseline,
            [38.0, 40.0, 41.0, 43.0, 44.0, 46.0]
                .into_iter()
                .map(|m| (US50, main, m))
                .chain([15.0, 17.0].into_iter().map(|m| (SKIDMORE, skid, m)))
                .chain([(COLLEGE, college, 14.0)])
                .collect(),
        ),
        (
            control,
            [23.0, 24.0, 25.0, 25.0, 26.0, 27.0]
                .into_iter()
                .map(|m| (US50, main, m))
                .chain([21.0, 23.0].into_iter().map(|m| (SKIDMORE, skid, m)))
                .collect(),
        ),
    ];
    for (date, trips) in &periods {
        for (k, (label, stops, minutes)) in trips.iter().enumerate() {
            let t = local(*date, 13, 4, 30) + Duration::minutes(12 * k as i64);
            s.add(label, *label != US50, stops, t, Some(*minutes), 10.0, VehicleClass::Cmv);
        }
        // outside the 13:00-15:00 window
        s.add(US50, false, main, local(*date, 12, 40, 0), Some(30.0), 10.0, VehicleClass::Cmv);
        s.add(SKIDMORE, true, skid, local(*date, 15, 10, 0), Some(18.0), 10.0, VehicleClass::Cmv);
        s.add(US50, false, main, local(*date, 14, 0, 0), Some(30.0), 10.0, VehicleClass::Other);
    }

    let query = |date: NaiveDate| QueryDocument {
        gates: vec![west.clone(), east.clone()],
        study_area: None,
        gate_sequence: vec![
            GateRequirement {
                gate_id: "west".into(),
                sign: 1,
            },
            GateRequirement {
                gate_id: "east".into(),
                sign: 1,
            },
        ],
        time_window: Some(TimeWindow {
            start: local(date, 13, 0, 0),
            end: local(date, 15, 0, 0),
        }),
        require_order: true,
        vehicle_class: Some(VehicleClass::Cmv),
        fold_theta: None,
        tz: Some("America/New_York".into()),
        hour_bin_minutes: Some(60),
    };
    let (mut trips, mut truth) = (s.trips, s.truth);
    sort_by_departure(&mut trips, &mut truth);
    CaseStudy {
        name: "case-study-2",
        network: net,
        trips,
        truth,
        queries: vec![("baseline".into(), query(baseline)), ("control".into(), query(control))],
    }
}

/// Route shares one week after an incident and on the incident day.
pub fn case_study_3_tables() -> (RouteShareTable, RouteShareTable) {
    let t = |c: [u64; 3]| {
        RouteShareTable::from_counts(
            ["I-95", "US-50", "other"]
                .iter()
                .zip(c)
                .map(|(l, n)| (l.to_string(), n)),
        )
    };
    (t([80, 36, 13]), t([67, 81, 37]))
}

/// Same comparison with the smallest counts giving the published shares.
pub fn case_study_3_minimal_tables() -> (RouteShareTable, RouteShareTable) {
    let t = |c: [u64; 3]| {
        RouteShareTable::from_counts(
            ["I-95", "US-50", "other"]
                .iter()
                .zip(c)
                .map(|(l, n)| (l.to_string(), n)),
        )
    };
    (t([31, 14, 5]), t([9, 11, 5]))
}
