//! Query, fold and tabulate in one call. The CLI and the service both go
//! through [`analyze`], so identical inputs give identical reports.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    box_summary, hourly_route_counts, probe_daily_counts, route_share_table, travel_time_stats, weekly_correlations,
    AnalyticsError, BoxSummary, HourlyRouteCounts, RouteShareTable, TravelTimeStats, WeeklyCorrelations,
};
use crate::gates::{CompiledQuery, Gate, GateError, TripSet};
use crate::ingest::{daily_aggregate, CountRecord, DailyCountSeries, IngestError, Trip};
use crate::matcher::{match_corpus, MatchParams, MatchedTrip, Rejection};
use crate::network::RoadNetwork;
use crate::routes::{extract_signatures, fold_routes, label_routes, RouteError, RouteSet};
use crate::timefmt::parse_tz;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("no count records for station {0}")]
    UnknownStation(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Where trips that passed the gate filter went missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub trips_in: usize,
    pub trip_set: usize,
    pub folded: usize,
    /// In the trip set, but without a matched path.
    pub unmatched: Vec<String>,
    /// Matched, but the path does not overlap the crossing window.
    pub empty_clip: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Name of the run manifest this report belongs to, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
    pub query_hash: String,
    pub theta: f64,
    pub trip_set: TripSet,
    pub route_sets: Vec<RouteSet>,
    pub shares: RouteShareTable,
    pub travel_times: TravelTimeStats,
    pub hourly: HourlyRouteCounts,
    pub diagnostics: Diagnostics,
}

impl AnalysisReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Filters `trips` with the query, folds the matched paths of the survivors
/// and builds the tables. `matched` may cover more trips than the query keeps.
pub fn analyze(
    net: &RoadNetwork,
    trips: &[Trip],
    matched: &[MatchedTrip],
    query: &CompiledQuery,
) -> Result<AnalysisReport, PipelineError> {
    let trip_set = query.filter(trips);
    let (sigs, sd) = extract_signatures(&trip_set.entries, matched, net)?;
    let mut route_sets = fold_routes(&sigs, query.theta)?;
    label_routes(&mut route_sets, net);
    let shares = route_share_table(&route_sets);
    let travel_times = travel_time_stats(&trip_set, &route_sets);
    let hourly = hourly_route_counts(&trip_set, &route_sets, query.bin_minutes, query.tz);
    let diagnostics = Diagnostics {
        trips_in: trips.len(),
        trip_set: trip_set.len(),
        folded: sigs.len(),
        unmatched: sd.unmatched,
        empty_clip: sd.empty_clip,
    };
    Ok(AnalysisReport {
        manifest: None,
        query_hash: query.hash.clone(),
        theta: query.theta,
        trip_set,
        route_sets,
        shares,
        travel_times,
        hourly,
        diagnostics,
    })
}

/// [`analyze`] for raw trips: matches only the trips that pass the filter.
pub fn analyze_unmatched(
    net: &RoadNetwork,
    trips: &[Trip],
    params: &MatchParams,
    query: &CompiledQuery,
) -> Result<(AnalysisReport, Vec<Rejection>), PipelineError> {
    params.validate().map_err(PipelineError::Params)?;
    let keep: HashSet<String> = query
        .filter(trips)
        .entries
        .into_iter()
        .map(|e| e.trip_id)
        .collect();
    let subset: Vec<Trip> = trips.iter().filter(|t| keep.contains(&t.trip_id)).cloned().collect();
    let (matched, rejected) = match_corpus(&subset, net, params);
    Ok((analyze(net, trips, &matched, query)?, rejected))
}

/// Probe counts at a station compared week by week with its true counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub station_id: String,
    pub probe: DailyCountSeries,
    pub truth: DailyCountSeries,
    pub weekly: WeeklyCorrelations,
    pub summary: BoxSummary,
}

/// Counts `+1` crossings of `gate` per local day over the truth series' span
/// and correlates them with `truth` per week.
pub fn validate_station(trips: &[Trip], gate: &Gate, truth: &DailyCountSeries) -> Result<ValidationReport, PipelineError> {
    let tz = parse_tz(&truth.timezone).map_err(PipelineError::Params)?;
    let span = match (truth.days.first(), truth.days.last()) {
        (Some(a), Some(b)) => Some((a.date, b.date)),
        _ => return Err(AnalyticsError::NoOverlap.into()),
    };
    let probe = probe_daily_counts(trips, gate, 1, &truth.station_id, tz, span);
    let weekly = weekly_correlations(&probe, truth)?;
    let summary = box_summary(&weekly);
    Ok(ValidationReport {
        station_id: truth.station_id.clone(),
        probe,
        truth: truth.clone(),
        weekly,
        summary,
    })
}

/// [`validate_station`] with the truth series aggregated from raw count
/// records of one station.
pub fn validate_from_counts(
    trips: &[Trip],
    gate: &Gate,
    counts: &[CountRecord],
    station_id: &str,
    cmv_classes: RangeInclusive<u16>,
    tz: &str,
) -> Result<ValidationReport, PipelineError> {
    let own: Vec<CountRecord> = counts.iter().filter(|c| c.station_id == station_id).cloned().collect();
    if own.is_empty() {
        return Err(PipelineError::UnknownStation(station_id.to_string()));
    }
    let classes: HashSet<u16> = cmv_classes.collect();
    let truth = daily_aggregate(&own, &classes, tz)?;
    validate_station(trips, gate, &truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::case_studies::*;

    #[test]
    fn enforcement_day_table() {
        let cs = case_study_1();
        let q = cs.query("enforcement").unwrap().compile().unwrap();
        let (r, rejected) = analyze_unmatched(&cs.network, &cs.trips, &MatchParams::default(), &q).unwrap();
        assert!(rejected.is_empty());
        assert_eq!(r.diagnostics.trip_set, 585);
        let rows: Vec<(&str, u64, &str)> = r
            .shares
            .rows
            .iter()
            .map(|row| (row.label.as_str(), row.trips, row.display.as_str()))
            .collect();
        assert_eq!(
            rows,
            [
                (I270, 552, "94%"),
                (TWIS, 21, "4%"),
                (MD27, 5, "0.9%"),
                (MD28, 3, "0.5%"),
                (MD355, 3, "0.5%"),
                (MD109, 1, "0.2%"),
            ]
        );
    }

    #[test]
    fn ramp_control_means() {
        let cs = case_study_2();
        for (name, expected) in [("baseline", vec![(US50, 6, 42.0), (SKIDMORE, 2, 16.0), (COLLEGE, 1, 14.0)]), ("control", vec![(US50, 6, 25.0), (SKIDMORE, 2, 22.0)])] {
            let q = cs.query(name).unwrap().compile().unwrap();
            let (r, _) = analyze_unmatched(&cs.network, &cs.trips, &MatchParams::default(), &q).unwrap();
            let rows = &r.travel_times.rows;
            assert_eq!(rows.len(), expected.len(), "{name}");
            for (row, (label, n, mean)) in rows.iter().zip(expected) {
                assert_eq!((row.label.as_str(), row.n_trips), (label, n));
                assert!((row.mean_minutes - mean).abs() < 0.05, "{name} {label}: {}", row.mean_minutes);
            }
        }
    }

    #[test]
    fn station_validation_on_synthetic_week() {
        let spec = crate::synth::ScenarioSpec::from_json(
            r#"{"network": "corridor", "start_date": "2023-01-02", "days": 14,
                "od_pairs": [{"origin": "c0", "destination": "c3", "trips_per_day": 300}],
                "weekend_multiplier": 0.3, "penetration": 0.5,
                "stations": [{"station_id": "S1", "segment_id": "c12"}], "seed": 3}"#,
        )
        .unwrap();
        let net = crate::fixtures::corridor();
        let out = crate::synth::generate_on(&net, &spec).unwrap();
        let gate = Gate::across_segment("S1", net.segment(net.seg_ix("c12").unwrap()), 30.0);
        let v = validate_station(&out.trips, &gate, &out.truth_daily[0]).unwrap();
        assert_eq!(v.weekly.points.len(), 2);
        assert_eq!(v.probe.days.len(), 14);
        assert!(v.summary.median.unwrap() > 0.75);
        assert!(v.probe.total() <= v.truth.total());

        let raw = validate_from_counts(&out.trips, &gate, &out.counts, "S1", crate::ingest::DEFAULT_CMV_CLASSES, &spec.tz).unwrap();
        assert_eq!(raw.truth, v.truth);
        assert!(matches!(
            validate_from_counts(&out.trips, &gate, &out.counts, "S9", 4..=13, &spec.tz),
            Err(PipelineError::UnknownStation(_))
        ));
    }

    #[test]
    fn report_round_trips_as_json() {
        let cs = case_study_2();
        let q = cs.query("baseline").unwrap().compile().unwrap();
        let (r, _) = analyze_unmatched(&cs.network, &cs.trips, &MatchParams::default(), &q).unwrap();
        let back: AnalysisReport = serde_json::from_str(&r.to_json_pretty()).unwrap();
        assert_eq!(back, r);
    }
}
