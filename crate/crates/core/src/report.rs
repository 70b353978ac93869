//! Delimited-text tables, route-set files and run manifests.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{
    BoxSummary, DetourRate, HourlyRouteCounts, RouteShareTable, ShareComparison, TravelTimeStats, WeeklyCorrelations,
};
use crate::routes::RouteSet;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `route,trips,share_pct,display`, plus a closing `total` row.
pub fn shares_csv(t: &RouteShareTable) -> String {
    let rows = t
        .rows
        .iter()
        .map(|r| vec![r.label.clone(), r.trips.to_string(), r.share_pct.to_string(), r.display.clone()])
        .chain(std::iter::once(vec![
            "total".into(),
            t.total.to_string(),
            if t.total > 0 { "100".into() } else { "0".into() },
            String::new(),
        ]));
    csv_string(&["route", "trips", "share_pct", "display"], rows)
}

pub fn travel_times_csv(s: &TravelTimeStats) -> String {
    csv_string(
        &["route", "trips", "mean_minutes", "display"],
        s.rows.iter().map(|r| {
            vec![
                r.label.clone(),
                r.n_trips.to_string(),
                r.mean_minutes.to_string(),
                format!("{:.0}", r.mean_minutes),
            ]
        }),
    )
}

/// One row per bin, one column per route label, then the bin total.
pub fn hourly_csv(h: &HourlyRouteCounts) -> String {
    let mut header: Vec<&str> = vec!["bin"];
    header.extend(h.labels.iter().map(String::as_str));
    header.push("total");
    let totals = h.bin_totals();
    csv_string(
        &header,
        h.bins.iter().zip(&h.counts).zip(totals).map(|((b, row), total)| {
            let mut r = vec![b.clone()];
            r.extend(row.iter().map(u64::to_string));
            r.push(total.to_string());
            r
        }),
    )
}

pub fn detour_rate_csv(d: &DetourRate) -> String {
    csv_string(
        &["bins", "detours", "trips", "rate_pct", "display"],
        [vec![
            d.bins.join(" "),
            d.detours.to_string(),
            d.trips.to_string(),
            opt(d.rate_pct),
            d.display.clone(),
        ]],
    )
}

pub fn comparison_csv(c: &ShareComparison) -> String {
    csv_string(
        &["route", "share_a", "share_b", "delta_pp", "display_delta"],
        c.rows.iter().map(|r| {
            vec![
                r.label.clone(),
                r.share_a.to_string(),
                r.share_b.to_string(),
                r.delta_pp.to_string(),
                r.display_delta.clone(),
            ]
        }),
    )
}

pub fn correlations_csv(ws: &[WeeklyCorrelations]) -> String {
    csv_string(
        &["station_id", "week_index", "week_start", "r", "undefined", "n_days"],
        ws.iter().flat_map(|w| {
            w.points.iter().map(|p| {
                vec![
                    p.station_id.clone(),
                    p.week_index.to_string(),
                    p.week_start.to_string(),
                    opt(p.r),
                    p.undefined.to_string(),
                    p.n_days.to_string(),
                ]
            })
        }),
    )
}

pub fn box_summary_csv(bs: &[BoxSummary]) -> String {
    csv_string(
        &["station_id", "min", "q1", "median", "q3", "max", "n", "n_undefined"],
        bs.iter().map(|b| {
            vec![
                b.station_id.clone(),
                opt(b.min),
                opt(b.q1),
                opt(b.median),
                opt(b.q3),
                opt(b.max),
                b.n.to_string(),
                b.n_undefined.to_string(),
            ]
        }),
    )
}

/// Fixed-width text rendering of a share table for terminals.
pub fn shares_text(t: &RouteShareTable) -> String {
    let width = t.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>7}  {:>7}\n", "Route", "Trips", "% Trips");
    for r in &t.rows {
        out.push_str(&format!("{:<width$}  {:>7}  {:>7}\n", r.label, r.trips, r.display));
    }
    out.push_str(&format!("{:<width$}  {:>7}\n", "Total", t.total));
    out
}

fn read_to_string(path: &Path) -> Result<String, ReportError> {
    let mut s = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), ReportError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T, ReportError> {
    let path = path.as_ref();
    serde_json::from_str(&read_to_string(path)?).map_err(|e| ReportError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_route_sets(path: impl AsRef<Path>, sets: &[RouteSet]) -> Result<(), ReportError> {
    write_json(path, &sets)
}

pub fn read_route_sets(path: impl AsRef<Path>) -> Result<Vec<RouteSet>, ReportError> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(with = "crate::timefmt::utc")]
    pub created: DateTime<Utc>,
    pub inputs: Vec<InputFile>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "tripgate".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            created: Utc::now(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, role: &str, path: impl AsRef<Path>) -> Result<(), ReportError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs.push(InputFile {
            role: role.into(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.into(), serde_json::to_value(value).expect("parameter serializes"));
    }
}
