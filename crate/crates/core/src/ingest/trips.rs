use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{column_index, csv_error, IngestError, Trip, VehicleClass, Waypoint, TRIPS_HEADER};
use crate::geo::LonLat;
use crate::timefmt::{format_utc, parse_utc};

/// Reads a trips file. Rows are grouped by `trip_id` (trips keep the order of
/// their first row) and sorted by timestamp. Exact duplicate rows collapse;
/// two different rows with the same trip and timestamp are an error.
pub fn read_trips(path: impl AsRef<Path>) -> Result<Vec<Trip>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trips(std::io::BufReader::new(file))
}

pub fn parse_trips(reader: impl Read) -> Result<Vec<Trip>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let cols: Vec<usize> = TRIPS_HEADER
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_, _>>()?;

    let mut order: Vec<Trip> = Vec::new();
    let mut lookup: HashMap<String, usize> = HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(cols[i]).unwrap_or("");
        let bad = |message: String| IngestError::Parse { line, message };

        let trip_id = field(0).to_string();
        if trip_id.is_empty() {
            return Err(bad("empty trip_id".into()));
        }
        let t = parse_utc(field(1)).ok_or_else(|| IngestError::Timestamp {
            line,
            value: field(1).to_string(),
        })?;
        let lat: f64 = field(2).parse().map_err(|_| bad(format!("invalid lat {:?}", field(2))))?;
        let lon: f64 = field(3).parse().map_err(|_| bad(format!("invalid lon {:?}", field(3))))?;
        let pos = LonLat::new(lon, lat);
        if !pos.is_valid() {
            return Err(bad(format!("coordinate out of range ({lat}, {lon})")));
        }
        let class = VehicleClass::parse(field(4))
            .ok_or_else(|| bad(format!("invalid vehicle_class {:?}", field(4))))?;

        let idx = *lookup.entry(trip_id.clone()).or_insert_with(|| {
            order.push(Trip {
                trip_id: trip_id.clone(),
                vehicle_class: class,
                waypoints: Vec::new(),
            });
            order.len() - 1
        });
        let trip = &mut order[idx];
        if trip.vehicle_class != class {
            return Err(bad(format!("trip {trip_id} has mixed vehicle classes")));
        }
        trip.waypoints.push(Waypoint { t, pos });
    }

    for trip in &mut order {
        trip.waypoints.sort_by_key(|w| w.t);
        let mut kept: Vec<Waypoint> = Vec::with_capacity(trip.waypoints.len());
        for w in trip.waypoints.drain(..) {
            match kept.last() {
                Some(prev) if prev.t == w.t => {
                    if prev.pos != w.pos {
                        return Err(IngestError::DuplicateRowConflict {
                            trip_id: trip.trip_id.clone(),
                            t: format_utc(&w.t),
                        });
                    }
                }
                _ => kept.push(w),
            }
        }
        trip.waypoints = kept;
    }
    Ok(order)
}

pub fn write_trips(writer: impl Write, trips: &[Trip]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIPS_HEADER).map_err(csv_error)?;
    for trip in trips {
        for wp in &trip.waypoints {
            w.write_record([
                trip.trip_id.as_str(),
                &format_utc(&wp.t),
                &wp.pos.lat.to_string(),
                &wp.pos.lon.to_string(),
                trip.vehicle_class.as_str(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })
}
