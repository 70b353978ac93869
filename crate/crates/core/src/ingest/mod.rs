//! Probe trip and count-station record files, and daily aggregation.
//!
//! Trips file columns: `trip_id, timestamp, lat, lon, vehicle_class`.
//! Counts file columns: `station_id, timestamp, class`, then any number of
//! extra columns (typically `weight_lb`, `speed_mph`) carried through as text.

mod counts;
mod daily;
mod trips;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LonLat;

pub use counts::{parse_counts, read_counts, write_counts};
pub use daily::daily_aggregate;
pub(crate) use daily::fill_span;
pub use trips::{parse_trips, read_trips, write_trips};

pub const TRIPS_HEADER: [&str; 5] = ["trip_id", "timestamp", "lat", "lon", "vehicle_class"];
pub const COUNTS_HEADER: [&str; 3] = ["station_id", "timestamp", "class"];

/// FHWA vehicle classes counted as commercial: 4 (buses) through 13.
/// Classes 1 to 3 are motorcycles, cars and light trucks.
pub const DEFAULT_CMV_CLASSES: std::ops::RangeInclusive<u16> = 4..=13;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid timestamp {value:?} at line {line}")]
    Timestamp { line: u64, value: String },
    #[error("trip {trip_id} has conflicting rows at {t}")]
    DuplicateRowConflict { trip_id: String, t: String },
    #[error("records from more than one station ({0} and {1})")]
    MixedStations(String, String),
    #[error("no records to aggregate")]
    Empty,
    #[error("{0}")]
    TimeZone(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    #[default]
    Cmv,
    Other,
}

impl VehicleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleClass::Cmv => "cmv",
            VehicleClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cmv" => Some(Self::Cmv),
            "other" => Some(Self::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: DateTime<Utc>,
    pub pos: LonLat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub trip_id: String,
    pub vehicle_class: VehicleClass,
    pub waypoints: Vec<Waypoint>,
}

impl Trip {
    pub fn start_time(&self) -> DateTime<Utc> {
        self.waypoints[0].t
    }

    pub fn end_time(&self) -> DateTime<Utc> {
        self.waypoints.last().expect("trip has waypoints").t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub station_id: String,
    pub t: DateTime<Utc>,
    pub class: u16,
    /// Extra columns as (header, value), in file order.
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCount {
    pub date: NaiveDate,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCountSeries {
    pub station_id: String,
    pub timezone: String,
    pub days: Vec<DayCount>,
}

impl DailyCountSeries {
    pub fn total(&self) -> u64 {
        self.days.iter().map(|d| d.count).sum()
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    IngestError::Parse {
        line,
        message: e.to_string(),
    }
}
