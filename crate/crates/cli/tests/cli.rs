use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tripgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripgate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = tripgate(args);
    assert!(
        o.status.success(),
        "tripgate {args:?} failed ({:?}): {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&read(p)).unwrap()
}

/// Synthesizes a case study and runs `report` on one of its queries.
fn report(dir: &Path, fixture: &str, query: &str, out: &str, extra: &[&str]) -> Output {
    let corpus = dir.join(fixture);
    if !corpus.exists() {
        ok(&["synth", "--fixture", fixture, "--out", s(&corpus)]);
    }
    let q = corpus.join(format!("query-{query}.json"));
    let mut args: Vec<String> = vec![
        "report".into(),
        "--network".into(),
        s(&corpus.join("network.geojson")).into(),
        "--trips".into(),
        s(&corpus.join("trips.csv")).into(),
        "--query".into(),
        s(&q).into(),
        "--out".into(),
        s(&dir.join(out)).into(),
    ];
    args.extend(extra.iter().map(|x| x.to_string()));
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn enforcement_case_reproduces_shares() {
    let dir = tempfile::tempdir().unwrap();
    let o = report(dir.path(), "case-study-1", "enforcement", "r", &[]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("Total"), "{stdout}");

    let shares = read(dir.path().join("r/shares.csv"));
    let rows: Vec<Vec<&str>> = shares.lines().skip(1).map(|l| l.rsplitn(4, ',').collect()).collect();
    let display: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(display, ["94%", "4%", "0.9%", "0.5%", "0.5%", "0.2%", ""]);
    let trips: Vec<&str> = rows.iter().map(|r| r[2]).collect();
    assert_eq!(trips, ["552", "21", "5", "3", "3", "1", "585"]);

    let r = json(dir.path().join("r/report.json"));
    assert_eq!(r["manifest"], "manifest.json");
    let m = json(dir.path().join("r/manifest.json"));
    assert_eq!(m["command"], "report");
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["report.json", "shares.csv", "travel_times.csv", "hourly.csv", "route_sets.json"] {
        assert!(outputs.contains(&f), "{f} missing from {outputs:?}");
        assert!(dir.path().join("r").join(f).is_file());
    }
    assert_eq!(m["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn reruns_are_byte_identical_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    report(dir.path(), "case-study-2", "baseline", "a", &[]);
    report(dir.path(), "case-study-2", "baseline", "b", &["--threads", "1"]);
    report(dir.path(), "case-study-2", "baseline", "c", &["--threads", "4"]);
    for f in ["report.json", "shares.csv", "travel_times.csv", "hourly.csv", "route_sets.json", "rejections.json"] {
        let a = read(dir.path().join("a").join(f));
        assert_eq!(a, read(dir.path().join("b").join(f)), "{f}");
        assert_eq!(a, read(dir.path().join("c").join(f)), "{f}");
    }
    let (ma, mb) = (json(dir.path().join("a/manifest.json")), json(dir.path().join("b/manifest.json")));
    assert_eq!(ma["inputs"], mb["inputs"]);
    assert_eq!(ma["parameters"], mb["parameters"]);
}

#[test]
fn detour_rate_output() {
    let dir = tempfile::tempdir().unwrap();
    let i270 = "Eisenhower Memorial Highway, I-270";
    let twis = "Hyattstown South TWIS";
    report(
        dir.path(),
        "case-study-1",
        "enforcement",
        "r",
        &["--detour-bin", "08:00", "--detour-bin", "09:00", "--compliant", i270, "--compliant", twis],
    );
    let text = read(dir.path().join("r/detour_rate.csv"));
    assert!(text.starts_with("bins,detours,trips,rate_pct,display\n08:00 09:00,"), "{text}");

    let corpus = dir.path().join("case-study-1");
    let o = tripgate(&[
        "report",
        "--network",
        s(&corpus.join("network.geojson")),
        "--trips",
        s(&corpus.join("trips.csv")),
        "--query",
        s(&corpus.join("query-enforcement.json")),
        "--out",
        s(&dir.path().join("bad")),
        "--detour-bin",
        "08:17",
        "--compliant",
        i270,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn query_with_no_matches_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("cs1");
    ok(&["synth", "--fixture", "case-study-1", "--out", s(&corpus)]);
    let q = dir.path().join("q.json");
    std::fs::write(
        &q,
        r#"{"gates": [{"gate_id": "far", "line": [[10.0, 10.0], [10.01, 10.0]]}],
            "gate_sequence": [{"gate_id": "far", "sign": 1}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["query", "--trips", s(&corpus.join("trips.csv")), "--query", s(&q), "--out", s(&out)]);
    assert_eq!(json(out.join("trip_set.json"))["entries"], serde_json::json!([]));
    assert_eq!(read(out.join("trip_set.csv")).lines().count(), 1);

    let folded = dir.path().join("fold");
    ok(&[
        "fold",
        "--network",
        "case-study-1",
        "--trips",
        s(&corpus.join("trips.csv")),
        "--query",
        s(&q),
        "--out",
        s(&folded),
    ]);
    assert_eq!(json(folded.join("route_sets.json")), serde_json::json!([]));
}

#[test]
fn match_then_fold_agrees_with_on_the_fly_matching() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("cs2");
    ok(&["synth", "--fixture", "case-study-2", "--out", s(&corpus)]);
    let net = s(&corpus.join("network.geojson")).to_string();
    let trips = s(&corpus.join("trips.csv")).to_string();
    let q = s(&corpus.join("query-control.json")).to_string();
    ok(&["match", "--network", &net, "--trips", &trips, "--out", s(&dir.path().join("m"))]);
    let matched = s(&dir.path().join("m/matched.csv")).to_string();
    ok(&["fold", "--network", &net, "--trips", &trips, "--query", &q, "--matched", &matched, "--out", s(&dir.path().join("f1"))]);
    ok(&["fold", "--network", &net, "--trips", &trips, "--query", &q, "--out", s(&dir.path().join("f2"))]);
    assert_eq!(read(dir.path().join("f1/route_sets.json")), read(dir.path().join("f2/route_sets.json")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());

    // usage
    assert_eq!(tripgate(&["report", "--network", "x"]).status.code(), Some(2));
    assert_eq!(tripgate(&["synth", "--fixture", "nope", "--out", d]).status.code(), Some(2));
    assert_eq!(tripgate(&["--threads", "0", "synth", "--fixture", "case-study-1", "--out", d]).status.code(), Some(2));

    // io
    let missing = dir.path().join("missing.csv");
    let o = tripgate(&["query", "--trips", s(&missing), "--query", s(&missing), "--out", d]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    // schema
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"gates\": 3}").unwrap();
    let trips = dir.path().join("trips.csv");
    std::fs::write(&trips, "trip_id,timestamp,lat,lon,vehicle_class\nt1,2022-04-11T13:00:00Z,39.0,-77.0,cmv\n").unwrap();
    let o = tripgate(&["query", "--trips", s(&trips), "--query", s(&bad), "--out", d]);
    assert_eq!(o.status.code(), Some(4));
    let unknown = dir.path().join("unknown.json");
    std::fs::write(
        &unknown,
        r#"{"gates": [{"gate_id": "a", "line": [[-77.0, 39.0], [-76.9, 39.0]]}],
            "gate_sequence": [{"gate_id": "b", "sign": 1}]}"#,
    )
    .unwrap();
    let o = tripgate(&["query", "--trips", s(&trips), "--query", s(&unknown), "--out", d]);
    assert_eq!(o.status.code(), Some(4));
    std::fs::write(&trips, "trip_id,timestamp\nt1,yesterday\n").unwrap();
    let o = tripgate(&["query", "--trips", s(&trips), "--query", s(&unknown), "--out", d]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn validate_and_compare_flows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"network": "corridor", "start_date": "2023-01-02", "days": 28,
            "od_pairs": [{"origin": "c0", "destination": "c3", "trips_per_day": 300}],
            "weekend_multiplier": 0.3, "penetration": 0.3, "waypoint_period_s": 60,
            "stations": [{"station_id": "S1", "segment_id": "c12"}], "seed": 4}"#,
    )
    .unwrap();
    let corpus = dir.path().join("corr");
    ok(&["synth", "--spec", s(&spec), "--out", s(&corpus), "--seed", "11"]);
    assert_eq!(json(corpus.join("manifest.json"))["parameters"]["seed"], 11);

    let trips = s(&corpus.join("trips.csv")).to_string();
    let counts = s(&corpus.join("counts.csv")).to_string();
    let v = dir.path().join("v");
    let o = ok(&[
        "validate", "--trips", &trips, "--counts", &counts, "--station", "S1", "--segment", "c12", "--network",
        "corridor", "--out", s(&v),
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("4 weeks"));
    let report = json(v.join("validation.json"));
    assert!(report["summary"]["median"].as_f64().unwrap() > 0.75);
    assert_eq!(read(v.join("correlations.csv")).lines().count(), 5);
    assert_eq!(read(v.join("daily.csv")).lines().count(), 29);
    assert!(v.join("box_summary.csv").is_file());

    let o = tripgate(&[
        "validate", "--trips", &trips, "--counts", &counts, "--station", "S9", "--segment", "c12", "--network",
        "corridor", "--out", s(&v),
    ]);
    assert_eq!(o.status.code(), Some(5));
    let o = tripgate(&["validate", "--trips", &trips, "--counts", &counts, "--station", "S1", "--out", s(&v)]);
    assert_eq!(o.status.code(), Some(2));

    report_pair_and_compare(dir.path());
}

fn report_pair_and_compare(dir: &Path) {
    report(dir, "case-study-2", "baseline", "base", &[]);
    report(dir, "case-study-2", "control", "ctrl", &[]);
    let out = dir.join("cmp");
    let o = ok(&[
        "compare",
        "--a",
        s(&dir.join("base/report.json")),
        "--b",
        s(&dir.join("ctrl/report.json")),
        "--out",
        s(&out),
    ]);
    assert!(String::from_utf8_lossy(&o.stdout).contains(" pp"));
    let c = json(out.join("comparison.json"));
    let sum: f64 = c["rows"].as_array().unwrap().iter().map(|r| r["delta_pp"].as_f64().unwrap()).sum();
    assert!(sum.abs() < 1e-9);
    assert!(out.join("comparison.csv").is_file());
    assert_eq!(json(out.join("manifest.json"))["inputs"].as_array().unwrap().len(), 2);

    let o = tripgate(&["compare", "--a", s(&dir.join("base/shares.csv")), "--b", s(&dir.join("ctrl/report.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
}
