use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{Context, Result};
use tripgate::analytics::{compare_periods, detour_rate};
use tripgate::fixtures;
use tripgate::gates::{CompiledQuery, Gate, QueryDocument, TripSet};
use tripgate::ingest::{read_counts, read_trips, write_counts, write_trips, Trip};
use tripgate::matcher::{match_corpus, read_matched, write_matched, MatchParams};
use tripgate::pipeline::{analyze, analyze_unmatched, validate_from_counts, AnalysisReport};
use tripgate::report::{self, read_json};
use tripgate::synth::case_studies::{case_study_1, case_study_2};
use tripgate::synth::{generate_on, write_truth, ScenarioSpec, SynthError};
use tripgate_service::{Server, ServiceConfig};

use crate::exit::UsageError;
use crate::output::{create_file, read_text, OutDir, MANIFEST};
use crate::{CompareArgs, FoldArgs, MatchArgs, QueryArgs, ReportArgs, ServeArgs, SynthArgs, ValidateArgs};

fn load_trips(out: &mut OutDir, path: &Path) -> Result<Vec<Trip>> {
    let trips = read_trips(path)?;
    out.input("trips", path)?;
    Ok(trips)
}

fn load_network(out: &mut OutDir, name_or_path: &str) -> Result<tripgate::network::RoadNetwork> {
    let net = fixtures::load(name_or_path)?;
    if Path::new(name_or_path).is_file() {
        out.input("network", Path::new(name_or_path))?;
    } else {
        out.manifest.param("network_fixture", name_or_path);
    }
    Ok(net)
}

/// Reads and compiles a query document, applying command-line overrides.
fn load_query(out: &mut OutDir, path: &Path, theta: Option<f64>, tz: Option<&str>) -> Result<CompiledQuery> {
    let text = read_text(path)?;
    let mut doc = QueryDocument::from_json(&text).with_context(|| format!("query {}", path.display()))?;
    out.input("query", path)?;
    if let Some(t) = theta {
        doc.fold_theta = Some(t);
    }
    if let Some(z) = tz {
        doc.tz = Some(z.to_string());
    }
    let compiled = doc.compile().with_context(|| format!("query {}", path.display()))?;
    out.manifest.param("query_hash", &compiled.hash);
    out.manifest.param("theta", compiled.theta);
    out.manifest.param("tz", compiled.tz.name());
    out.manifest.param("hour_bin_minutes", compiled.bin_minutes);
    Ok(compiled)
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "synth")?;
    let (net, trips, truth, counts, queries) = match (&a.spec, &a.fixture) {
        (Some(path), _) => {
            let mut spec = ScenarioSpec::from_json(&read_text(path)?)?;
            out.input("spec", path)?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            out.manifest.param("seed", spec.seed);
            let net = spec.load_network()?;
            let o = generate_on(&net, &spec)?;
            out.json("truth_daily.json", &o.truth_daily)?;
            (net, o.trips, o.truth, o.counts, Vec::new())
        }
        (None, Some(name)) => {
            if a.seed.is_some() {
                return Err(UsageError("--seed applies to --spec only; case studies have fixed seeds".into()).into());
            }
            out.manifest.param("fixture", name);
            let cs = if name == "case-study-1" { case_study_1() } else { case_study_2() };
            (cs.network, cs.trips, cs.truth, Vec::new(), cs.queries)
        }
        (None, None) => unreachable!("clap requires --spec or --fixture"),
    };
    net.write_geojson(out.path("network.geojson"))
        .with_context(|| format!("writing {}", out.path("network.geojson").display()))?;
    out.written("network.geojson");
    write_trips(create_file(&out.path("trips.csv"))?, &trips)?;
    out.written("trips.csv");
    write_truth(create_file(&out.path("truth.csv"))?, &truth).map_err(|e| match e {
        SynthError::Io { source, .. } => SynthError::Io {
            path: out.path("truth.csv").display().to_string(),
            source,
        },
        other => other,
    })?;
    out.written("truth.csv");
    write_counts(create_file(&out.path("counts.csv"))?, &counts)?;
    out.written("counts.csv");
    for (name, doc) in &queries {
        out.text(&format!("query-{name}.json"), &(doc.to_json_pretty() + "\n"))?;
    }
    eprintln!("{} probe trips, {} count records -> {}", trips.len(), counts.len(), a.out.display());
    out.finish()
}

pub fn match_trips(a: MatchArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "match")?;
    let net = load_network(&mut out, &a.network)?;
    let trips = load_trips(&mut out, &a.trips)?;
    let mut params = MatchParams::default();
    if let Some(r) = a.candidate_radius_m {
        params.candidate_radius_m = r;
    }
    if let Some(s) = a.emission_sigma_m {
        params.emission_sigma_m = s;
    }
    params.validate().map_err(UsageError)?;
    out.manifest.param("matching", params);
    let (matched, rejected) = match_corpus(&trips, &net, &params);
    write_matched(create_file(&out.path("matched.csv"))?, &matched)?;
    out.written("matched.csv");
    out.json("rejections.json", &rejected)?;
    eprintln!("matched {} of {} trips", matched.len(), trips.len());
    out.finish()
}

fn trip_set_csv(ts: &TripSet) -> String {
    let mut s = String::from("trip_id,departure,first_crossing,last_crossing\n");
    let fmt = tripgate::timefmt::format_utc;
    for e in &ts.entries {
        s.push_str(&format!(
            "{},{},{},{}\n",
            e.trip_id,
            fmt(&e.departure),
            fmt(&e.first_crossing()),
            fmt(&e.last_crossing())
        ));
    }
    s
}

pub fn query(a: QueryArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "query")?;
    let q = load_query(&mut out, &a.query, None, a.tz.as_deref())?;
    let trips = load_trips(&mut out, &a.trips)?;
    let ts = q.filter(&trips);
    out.json("trip_set.json", &ts)?;
    out.text("trip_set.csv", &trip_set_csv(&ts))?;
    eprintln!("{} of {} trips pass the query", ts.len(), trips.len());
    out.finish()
}

fn run_analysis(out: &mut OutDir, a: &FoldArgs, tz: Option<&str>) -> Result<AnalysisReport> {
    let net = load_network(out, &a.network)?;
    let q = load_query(out, &a.query, a.theta, tz)?;
    let trips = load_trips(out, &a.trips)?;
    match &a.matched {
        Some(path) => {
            let matched = read_matched(path)?;
            out.input("matched", path)?;
            Ok(analyze(&net, &trips, &matched, &q)?)
        }
        None => {
            let params = MatchParams::default();
            out.manifest.param("matching", params);
            let (r, rejected) = analyze_unmatched(&net, &trips, &params, &q)?;
            out.json("rejections.json", &rejected)?;
            Ok(r)
        }
    }
}

pub fn fold(a: FoldArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "fold")?;
    let r = run_analysis(&mut out, &a, None)?;
    out.json("route_sets.json", &r.route_sets)?;
    eprintln!("{} trips folded into {} route sets", r.diagnostics.folded, r.route_sets.len());
    out.finish()
}

pub fn report(a: ReportArgs) -> Result<()> {
    let mut out = OutDir::create(&a.fold.out, "report")?;
    let mut r = run_analysis(&mut out, &a.fold, a.tz.as_deref())?;
    r.manifest = Some(MANIFEST.to_string());
    out.json("report.json", &r)?;
    out.text("shares.csv", &report::shares_csv(&r.shares))?;
    out.text("travel_times.csv", &report::travel_times_csv(&r.travel_times))?;
    out.text("hourly.csv", &report::hourly_csv(&r.hourly))?;
    out.json("route_sets.json", &r.route_sets)?;
    if !a.detour_bins.is_empty() {
        let bins = a
            .detour_bins
            .iter()
            .map(|b| {
                r.hourly.bin_of(b).ok_or_else(|| {
                    UsageError(format!("--detour-bin {b:?} is not a bin start (expected HH:MM on the bin grid)"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let compliant: Vec<&str> = a.compliant.iter().map(String::as_str).collect();
        out.manifest.param("detour_bins", &a.detour_bins);
        out.manifest.param("compliant", &a.compliant);
        let d = detour_rate(&r.hourly, &bins, &compliant);
        out.text("detour_rate.csv", &report::detour_rate_csv(&d))?;
    }
    print!("{}", report::shares_text(&r.shares));
    out.finish()
}

fn parse_classes(s: &str) -> Result<RangeInclusive<u16>, UsageError> {
    let bad = || UsageError(format!("--cmv-classes expects LO-HI, got {s:?}"));
    let (lo, hi) = s.split_once('-').ok_or_else(bad)?;
    let (lo, hi): (u16, u16) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

pub fn validate(a: ValidateArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "validate")?;
    let classes = parse_classes(&a.cmv_classes)?;
    let gate = match (&a.gate, &a.segment) {
        (Some(path), _) => {
            let g: Gate = serde_json::from_str(&read_text(path)?).with_context(|| format!("gate {}", path.display()))?;
            g.validate()?;
            out.input("gate", path)?;
            g
        }
        (None, Some(seg)) => {
            let name = a.network.as_deref().expect("clap requires --network with --segment");
            let net = load_network(&mut out, name)?;
            let ix = net.require_seg(seg)?;
            out.manifest.param("segment", seg);
            Gate::across_segment(&a.station, net.segment(ix), 30.0)
        }
        (None, None) => unreachable!("clap requires --gate or --segment"),
    };
    let trips = load_trips(&mut out, &a.trips)?;
    let counts = read_counts(&a.counts)?;
    out.input("counts", &a.counts)?;
    out.manifest.param("station", &a.station);
    out.manifest.param("tz", &a.tz);
    out.manifest.param("cmv_classes", [classes.start(), classes.end()]);
    out.manifest.param("gate", &gate);

    let v = validate_from_counts(&trips, &gate, &counts, &a.station, classes, &a.tz)?;
    out.json("validation.json", &v)?;
    out.text("correlations.csv", &report::correlations_csv(std::slice::from_ref(&v.weekly)))?;
    out.text("box_summary.csv", &report::box_summary_csv(std::slice::from_ref(&v.summary)))?;
    let mut daily: BTreeMap<_, (u64, u64)> = BTreeMap::new();
    for d in &v.probe.days {
        daily.entry(d.date).or_default().0 = d.count;
    }
    for d in &v.truth.days {
        daily.entry(d.date).or_default().1 = d.count;
    }
    let mut csv = String::from("date,probe,truth\n");
    for (date, (p, t)) in daily {
        csv.push_str(&format!("{date},{p},{t}\n"));
    }
    out.text("daily.csv", &csv)?;
    let median = v.summary.median.map_or("undefined".to_string(), |m| format!("{m:.3}"));
    println!("{}: {} weeks, median weekly r {median}", v.station_id, v.summary.n);
    out.finish()
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let mut out = OutDir::create(&a.out, "compare")?;
    let ra: AnalysisReport = read_json(&a.a)?;
    let rb: AnalysisReport = read_json(&a.b)?;
    out.input("a", &a.a)?;
    out.input("b", &a.b)?;
    let c = compare_periods(&ra.shares, &rb.shares);
    out.json("comparison.json", &c)?;
    let text = report::comparison_csv(&c);
    out.text("comparison.csv", &text)?;
    print!("{text}");
    out.finish()
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let mut config = ServiceConfig::load(&a.config)?;
    if let Some(b) = a.bind {
        config.bind = b;
    }
    eprintln!("loading {} corpora", config.corpora.len());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let server = Server::bind(&config).await?;
        eprintln!("listening on http://{}", server.local_addr()?);
        server.run().await?;
        Ok::<_, anyhow::Error>(())
    })
}
