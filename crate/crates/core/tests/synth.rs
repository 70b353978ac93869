mod common;

use std::collections::BTreeMap;

use tripgate::fixtures;
use tripgate::matcher::{match_corpus, MatchParams};
use tripgate::synth::{self, StationSpec};

fn corridor_spec(penetration: f64, seed: u64) -> synth::ScenarioSpec {
    let net = fixtures::corridor();
    let mut s = common::spec("corridor", "2023-01-02", common::random_pairs(&net, 1, 0.0, 2500.0, 3500.0, 1), 0.0, 300.0, 25.0, seed);
    s.od_pairs[0].trips_per_day = 400.0;
    s.days = 14;
    s.penetration = penetration;
    s.stations = vec![StationSpec {
        station_id: "S1".into(),
        segment_id: "c12".into(),
    }];
    s
}

#[test]
fn same_seed_same_corpus_through_files() {
    let spec = corridor_spec(0.4, 9);
    let text = serde_json::to_string(&spec).unwrap();
    let again = synth::ScenarioSpec::from_json(&text).unwrap();
    let (a, b) = (synth::generate(&spec).unwrap(), synth::generate(&again).unwrap());
    assert_eq!(a.trips, b.trips);
    assert_eq!(a.counts, b.counts);
    assert_eq!(a.truth_daily, b.truth_daily);
}

#[test]
fn penetration_converges() {
    for p in [0.05, 0.25, 0.6] {
        let out = synth::generate(&corridor_spec(p, 21)).unwrap();
        let n = out.truth.len() as f64;
        let probes = out.truth.iter().filter(|t| t.probe).count() as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((probes - n * p).abs() < 5.0 * sd, "p {p}: {probes} of {n}");
        assert_eq!(probes as usize, out.trips.len());
    }
}

#[test]
fn degrade_drops_within_binomial_bounds() {
    let net = fixtures::named("grid5x5").unwrap();
    let spec = common::spec("grid5x5", "2022-04-11", common::random_pairs(&net, 20, 10.0, 800.0, 3000.0, 2), 0.0, 5.0, 10.0, 2);
    let trips = synth::generate_on(&net, &spec).unwrap().trips;
    let interior: usize = trips.iter().map(|t| t.waypoints.len() - 2).sum();
    for rate in [0.1, 0.5, 0.9] {
        let d = synth::degrade(&trips, rate, 3);
        let kept: usize = d.iter().map(|t| t.waypoints.len() - 2).sum();
        let dropped = (interior - kept) as f64;
        let n = interior as f64;
        let sd = (n * rate * (1.0 - rate)).sqrt();
        assert!((dropped - n * rate).abs() < 5.0 * sd, "rate {rate}: {dropped} of {n}");
    }
}

#[test]
fn matching_degrades_gracefully_with_noise() {
    let net = fixtures::named("grid5x5").unwrap();
    let mut agreement = Vec::new();
    for sigma in [0.0, 5.0, 15.0, 30.0] {
        let spec = common::spec("grid5x5", "2022-04-11", common::random_pairs(&net, 30, 6.0, 800.0, 3000.0, 8), sigma, 30.0, 15.0, 8);
        let out = synth::generate_on(&net, &spec).unwrap();
        let truth: BTreeMap<String, Vec<String>> = out.truth.into_iter().map(|t| (t.trip_id, t.path)).collect();
        let (matched, _) = match_corpus(&out.trips, &net, &MatchParams::default());
        let (a, n) = common::path_agreement(&matched, &truth);
        agreement.push(a as f64 / n as f64);
    }
    assert!(agreement[0] > 0.99, "{agreement:?}");
    // allow a little sampling slack between neighbouring levels
    assert!(agreement.windows(2).all(|w| w[1] <= w[0] + 0.01), "{agreement:?}");
    assert!(agreement[3] < agreement[0], "{agreement:?}");
}
