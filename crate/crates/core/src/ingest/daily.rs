use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;

use super::{CountRecord, DailyCountSeries, DayCount, IngestError};
use crate::timefmt::parse_tz;

/// Counts records of the given classes per local calendar day. The series
/// spans the first to last local date of all records (any class), with
/// zero-count days filled in.
pub fn daily_aggregate(
    records: &[CountRecord],
    cmv_classes: &HashSet<u16>,
    tz: &str,
) -> Result<DailyCountSeries, IngestError> {
    let zone = parse_tz(tz).map_err(IngestError::TimeZone)?;
    let first = records.first().ok_or(IngestError::Empty)?;
    let mut per_day: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for r in records {
        if r.station_id != first.station_id {
            return Err(IngestError::MixedStations(
                first.station_id.clone(),
                r.station_id.clone(),
            ));
        }
        let date = r.t.with_timezone(&zone).date_naive();
        let slot = per_day.entry(date).or_insert(0);
        if cmv_classes.contains(&r.class) {
            *slot += 1;
        }
    }
    Ok(DailyCountSeries {
        station_id: first.station_id.clone(),
        timezone: tz.to_string(),
        days: fill_span(&per_day),
    })
}

/// Dense day list from the first to the last key of `per_day`.
pub(crate) fn fill_span(per_day: &BTreeMap<NaiveDate, u64>) -> Vec<DayCount> {
    let (Some((&lo, _)), Some((&hi, _))) = (per_day.first_key_value(), per_day.last_key_value()) else {
        return Vec::new();
    };
    lo.iter_days()
        .take_while(|d| *d <= hi)
        .map(|date| DayCount {
            date,
            count: per_day.get(&date).copied().unwrap_or(0),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timefmt::parse_utc;

    fn rec(t: &str, class: u16) -> CountRecord {
        CountRecord {
            station_id: "S1".into(),
            t: parse_utc(t).unwrap(),
            class,
            extra: Vec::new(),
        }
    }

    fn cmv() -> HashSet<u16> {
        (4..=13).collect()
    }

    #[test]
    fn ten_records_one_day() {
        let recs: Vec<_> = (0..10)
            .map(|i| rec(&format!("2022-04-11T{:02}:00:00Z", 12 + i), 9))
            .collect();
        let s = daily_aggregate(&recs, &cmv(), "America/New_York").unwrap();
        assert_eq!(s.days.len(), 1);
        assert_eq!(s.days[0].count, 10);
    }

    #[test]
    fn local_midnight_boundary() {
        // 23:30 and 00:30 EDT
        let recs = vec![rec("2022-04-12T03:30:00Z", 9), rec("2022-04-12T04:30:00Z", 9)];
        let s = daily_aggregate(&recs, &cmv(), "America/New_York").unwrap();
        assert_eq!(
            s.days,
            vec![
                DayCount { date: NaiveDate::from_ymd_opt(2022, 4, 11).unwrap(), count: 1 },
                DayCount { date: NaiveDate::from_ymd_opt(2022, 4, 12).unwrap(), count: 1 },
            ]
        );
    }

    #[test]
    fn gaps_filled_and_passenger_excluded() {
        let recs = vec![rec("2022-04-11T15:00:00Z", 9), rec("2022-04-14T15:00:00Z", 2)];
        let s = daily_aggregate(&recs, &cmv(), "UTC").unwrap();
        let counts: Vec<u64> = s.days.iter().map(|d| d.count).collect();
        assert_eq!(counts, vec![1, 0, 0, 0]);
    }

    #[test]
    fn mixed_stations_rejected() {
        let mut b = rec("2022-04-11T15:00:00Z", 9);
        b.station_id = "S2".into();
        let recs = vec![rec("2022-04-11T15:00:00Z", 9), b];
        assert!(matches!(
            daily_aggregate(&recs, &cmv(), "UTC").unwrap_err(),
            IngestError::MixedStations(..)
        ));
    }

    #[test]
    fn unknown_zone() {
        let recs = vec![rec("2022-04-11T15:00:00Z", 9)];
        assert!(matches!(
            daily_aggregate(&recs, &cmv(), "Mars/Olympus").unwrap_err(),
            IngestError::TimeZone(_)
        ));
    }
}
