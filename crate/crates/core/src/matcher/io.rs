//! Matched-trip delimited text:
//! `trip_id, seq, segment_id, entry_time, exit_time, inferred, unmatched_fraction`.
//! The last column is optional on read (defaults to 0).

use std::io::{Read, Write};
use std::path::Path;

use super::{MatchedTrip, PathStep};
use crate::ingest::IngestError;
use crate::timefmt::{format_utc, parse_utc};

const HEADER: [&str; 7] = [
    "trip_id",
    "seq",
    "segment_id",
    "entry_time",
    "exit_time",
    "inferred",
    "unmatched_fraction",
];

pub fn write_matched(writer: impl Write, trips: &[MatchedTrip]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| IngestError::Parse {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(HEADER).map_err(err)?;
    for m in trips {
        for (seq, s) in m.path.iter().enumerate() {
            w.write_record([
                m.trip_id.as_str(),
                &seq.to_string(),
                &s.segment_id,
                &format_utc(&s.entry_time),
                &format_utc(&s.exit_time),
                if s.inferred { "true" } else { "false" },
                &m.unmatched_fraction.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })
}

pub fn read_matched(path: impl AsRef<Path>) -> Result<Vec<MatchedTrip>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matched(std::io::BufReader::new(file))
}

pub fn parse_matched(reader: impl Read) -> Result<Vec<MatchedTrip>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = [0usize; 6];
    for (i, name) in HEADER[..6].iter().enumerate() {
        cols[i] = col(name).ok_or_else(|| IngestError::Parse {
            line: 1,
            message: format!("missing column {name:?}"),
        })?;
    }
    let frac_col = col(HEADER[6]);

    let mut out: Vec<MatchedTrip> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| IngestError::Parse { line: 0, message: e.to_string() })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let f = |i: usize| row.get(i).unwrap_or("");
        let bad = |message: String| IngestError::Parse { line, message };
        let time = |i: usize| {
            parse_utc(f(i)).ok_or_else(|| IngestError::Timestamp { line, value: f(i).to_string() })
        };
        let trip_id = f(cols[0]);
        let seq: usize = f(cols[1]).parse().map_err(|_| bad(format!("invalid seq {:?}", f(cols[1]))))?;
        let inferred = match f(cols[5]) {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(bad(format!("invalid inferred flag {other:?}"))),
        };
        let unmatched_fraction = match frac_col {
            Some(c) => f(c).parse().map_err(|_| bad(format!("invalid unmatched_fraction {:?}", f(c))))?,
            None => 0.0,
        };
        let step = PathStep {
            segment_id: f(cols[2]).to_string(),
            entry_time: time(cols[3])?,
            exit_time: time(cols[4])?,
            inferred,
        };
        match out.last_mut() {
            Some(m) if m.trip_id == trip_id => {
                if seq != m.path.len() {
                    return Err(bad(format!("trip {trip_id}: expected seq {}, found {seq}", m.path.len())));
                }
                m.path.push(step);
            }
            _ => {
                if seq != 0 {
                    return Err(bad(format!("trip {trip_id}: path must start at seq 0")));
                }
                out.push(MatchedTrip {
                    trip_id: trip_id.to_string(),
                    path: vec![step],
                    unmatched_fraction,
                });
            }
        }
    }
    Ok(out)
}
