use std::io::{Read, Write};
use std::path::Path;

use super::{column_index, csv_error, CountRecord, IngestError, COUNTS_HEADER};
use crate::timefmt::{format_utc, parse_utc};

pub fn read_counts(path: impl AsRef<Path>) -> Result<Vec<CountRecord>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_counts(std::io::BufReader::new(file))
}

/// One record per row. Classes are not filtered here.
pub fn parse_counts(reader: impl Read) -> Result<Vec<CountRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let cols: Vec<usize> = COUNTS_HEADER
        .iter()
        .map(|c| column_index(&headers, c))
        .collect::<Result<_, _>>()?;
    let extra_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !cols.contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let t = parse_utc(field(cols[1])).ok_or_else(|| IngestError::Timestamp {
            line,
            value: field(cols[1]).to_string(),
        })?;
        let class: u16 = field(cols[2]).parse().map_err(|_| IngestError::Parse {
            line,
            message: format!("invalid class {:?}", field(cols[2])),
        })?;
        out.push(CountRecord {
            station_id: field(cols[0]).to_string(),
            t,
            class,
            extra: extra_cols
                .iter()
                .map(|(i, h)| (h.clone(), field(*i).to_string()))
                .collect(),
        });
    }
    Ok(out)
}

/// Writes records; extra column headers are taken from the first record.
pub fn write_counts(writer: impl Write, records: &[CountRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let extra_headers: Vec<&str> = records
        .first()
        .map(|r| r.extra.iter().map(|(h, _)| h.as_str()).collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = COUNTS_HEADER.to_vec();
    header.extend(&extra_headers);
    w.write_record(&header).map_err(csv_error)?;
    for r in records {
        let mut row = vec![r.station_id.clone(), format_utc(&r.t), r.class.to_string()];
        for h in &extra_headers {
            row.push(
                r.extra
                    .iter()
                    .find(|(k, _)| k == h)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<writer>".into(),
        source,
    })
}
