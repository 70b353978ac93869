use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SynthError, TruthTrip};

/// One row of the ground-truth file; the path is space separated.
#[derive(Serialize, Deserialize)]
struct Row {
    trip_id: String,
    departure: String,
    route_label: String,
    detour: bool,
    probe: bool,
    path: String,
}

fn io_err(e: csv::Error) -> SynthError {
    SynthError::Io {
        path: "<ground truth>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

pub fn write_truth(writer: impl Write, truth: &[TruthTrip]) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(writer);
    for t in truth {
        w.serialize(Row {
            trip_id: t.trip_id.clone(),
            departure: crate::timefmt::format_utc(&t.departure),
            route_label: t.route_label.clone(),
            detour: t.detour,
            probe: t.probe,
            path: t.path.join(" "),
        })
        .map_err(io_err)?;
    }
    w.flush().map_err(|source| SynthError::Io {
        path: "<ground truth>".into(),
        source,
    })
}

pub fn read_truth(reader: impl Read) -> Result<Vec<TruthTrip>, SynthError> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<Row>()
        .map(|row| {
            let row = row.map_err(|e| SynthError::Spec(format!("ground truth: {e}")))?;
            let departure = crate::timefmt::parse_utc(&row.departure)
                .ok_or_else(|| SynthError::Spec(format!("ground truth: bad timestamp {:?}", row.departure)))?;
            Ok(TruthTrip {
                trip_id: row.trip_id,
                departure,
                route_label: row.route_label,
                detour: row.detour,
                probe: row.probe,
                path: row.path.split_whitespace().map(str::to_string).collect(),
            })
        })
        .collect()
}
