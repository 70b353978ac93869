use std::collections::HashMap;

use chrono::Timelike;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::shares::{display_tenths, format_tenths};
use crate::gates::{TripSet, TripSetEntry};
use crate::routes::RouteSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeRow {
    pub label: String,
    pub n_trips: usize,
    pub mean_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TravelTimeStats {
    pub first_gate: String,
    pub last_gate: String,
    pub rows: Vec<TravelTimeRow>,
}

/// Minutes from the entry's departure (last crossing of the first gate before
/// the second) to its crossing of the last gate.
pub fn travel_minutes(e: &TripSetEntry) -> f64 {
    let us = (e.last_crossing() - e.departure)
        .num_microseconds()
        .expect("travel time fits in microseconds");
    us as f64 / 60e6
}

/// Mean travel time per route set, rows ordered like the share table.
/// Route-set members must all be trip-set entries.
pub fn travel_time_stats(trip_set: &TripSet, sets: &[RouteSet]) -> TravelTimeStats {
    let by_id: HashMap<&str, &TripSetEntry> =
        trip_set.entries.iter().map(|e| (e.trip_id.as_str(), e)).collect();
    let mut rows: Vec<TravelTimeRow> = sets
        .iter()
        .filter(|s| !s.members.is_empty())
        .map(|s| {
            let total: f64 = s
                .members
                .iter()
                .map(|m| travel_minutes(by_id.get(m.as_str()).expect("route member is in the trip set")))
                .sum();
            TravelTimeRow {
                label: s.label.clone(),
                n_trips: s.members.len(),
                mean_minutes: total / s.members.len() as f64,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.n_trips.cmp(&a.n_trips).then_with(|| a.label.cmp(&b.label)));
    TravelTimeStats {
        first_gate: trip_set.gate_ids.first().cloned().unwrap_or_default(),
        last_gate: trip_set.gate_ids.last().cloned().unwrap_or_default(),
        rows,
    }
}

/// Trip counts per local time-of-day bin and route label. `counts[bin][k]`
/// belongs to `labels[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyRouteCounts {
    pub tz: String,
    pub bin_minutes: u32,
    /// Bin start as local `HH:MM`.
    pub bins: Vec<String>,
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl HourlyRouteCounts {
    pub fn label_totals(&self) -> Vec<u64> {
        (0..self.labels.len())
            .map(|k| self.counts.iter().map(|row| row[k]).sum())
            .collect()
    }

    pub fn bin_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn bin_of(&self, local_hhmm: &str) -> Option<usize> {
        self.bins.iter().position(|b| b == local_hhmm)
    }
}

/// Bins each route-set member by the local time of its first qualifying
/// crossing. Labels follow share-table order. `bin_minutes` must divide a day.
pub fn hourly_route_counts(trip_set: &TripSet, sets: &[RouteSet], bin_minutes: u32, tz: Tz) -> HourlyRouteCounts {
    assert!(bin_minutes > 0 && 1440 % bin_minutes == 0, "bin must divide 24 h");
    let n_bins = (1440 / bin_minutes) as usize;
    let labels: Vec<String> = super::shares::route_share_table(sets)
        .rows
        .into_iter()
        .map(|r| r.label)
        .collect();
    let label_ix: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let by_id: HashMap<&str, &TripSetEntry> =
        trip_set.entries.iter().map(|e| (e.trip_id.as_str(), e)).collect();
    let mut counts = vec![vec![0u64; labels.len()]; n_bins];
    for s in sets {
        let k = label_ix[s.label.as_str()];
        for m in &s.members {
            let e = by_id.get(m.as_str()).expect("route member is in the trip set");
            let local = e.first_crossing().with_timezone(&tz);
            let minute = local.hour() * 60 + local.minute();
            counts[(minute / bin_minutes) as usize][k] += 1;
        }
    }
    let bins = (0..n_bins as u32)
        .map(|b| format!("{:02}:{:02}", b * bin_minutes / 60, b * bin_minutes % 60))
        .collect();
    HourlyRouteCounts {
        tz: tz.name().to_string(),
        bin_minutes,
        bins,
        labels,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetourRate {
    pub bins: Vec<String>,
    pub detours: u64,
    pub trips: u64,
    /// Unrounded percentage; `None` when there are no trips in the bins.
    pub rate_pct: Option<f64>,
    pub display: String,
}

/// Share of trips in the selected bins whose route is not one of
/// `compliant_labels`.
pub fn detour_rate(h: &HourlyRouteCounts, bins: &[usize], compliant_labels: &[&str]) -> DetourRate {
    let mut trips = 0;
    let mut detours = 0;
    for &b in bins {
        for (k, label) in h.labels.iter().enumerate() {
            let c = h.counts[b][k];
            trips += c;
            if !compliant_labels.contains(&label.as_str()) {
                detours += c;
            }
        }
    }
    let rate_pct = (trips > 0).then(|| detours as f64 * 100.0 / trips as f64);
    let display = if trips > 0 {
        format_tenths(display_tenths(detours, trips), "%")
    } else {
        "-".to_string()
    };
    DetourRate {
        bins: bins.iter().map(|&b| h.bins[b].clone()).collect(),
        detours,
        trips,
        rate_pct,
        display,
    }
}
