use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, Days, NaiveDate};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::gates::{detect_crossings, Gate};
use crate::ingest::{DailyCountSeries, Trip};

/// Pearson correlation. `None` when either series has zero variance.
///
/// Deviations are accumulated around the means; the result is clamped to
/// `[-1, 1]` to absorb rounding.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, AnalyticsError> {
    if xs.len() != ys.len() {
        return Err(AnalyticsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(AnalyticsError::TooShort(xs.len()));
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let prod = sxx * syy;
    let denom = if prod.is_normal() { prod.sqrt() } else { sxx.sqrt() * syy.sqrt() };
    Ok(Some((sxy / denom).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub station_id: String,
    /// ISO week number of the week's Monday.
    pub week_index: u32,
    pub week_start: NaiveDate,
    /// `None` (with `undefined = true`) when a series is constant that week.
    pub r: Option<f64>,
    pub undefined: bool,
    pub n_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyCorrelations {
    pub station_id: String,
    pub points: Vec<CorrelationPoint>,
    /// Mondays of overlapping weeks lacking a day in either series.
    pub skipped_weeks: Vec<NaiveDate>,
}

fn monday_of(d: NaiveDate) -> NaiveDate {
    d - Days::new(d.weekday().num_days_from_monday() as u64)
}

/// One point per Monday-start week with all seven days present in both
/// series.
pub fn weekly_correlations(
    probe: &DailyCountSeries,
    truth: &DailyCountSeries,
) -> Result<WeeklyCorrelations, AnalyticsError> {
    let p: HashMap<NaiveDate, u64> = probe.days.iter().map(|d| (d.date, d.count)).collect();
    let t: HashMap<NaiveDate, u64> = truth.days.iter().map(|d| (d.date, d.count)).collect();
    let mut overlap: Vec<NaiveDate> = p.keys().filter(|d| t.contains_key(d)).copied().collect();
    overlap.sort();
    let (Some(&first), Some(&last)) = (overlap.first(), overlap.last()) else {
        return Err(AnalyticsError::NoOverlap);
    };
    let mut points = Vec::new();
    let mut skipped_weeks = Vec::new();
    let mut monday = monday_of(first);
    while monday <= last {
        let days: Vec<NaiveDate> = (0..7).map(|k| monday + Days::new(k)).collect();
        let pairs: Vec<(f64, f64)> = days
            .iter()
            .filter_map(|d| Some((*p.get(d)? as f64, *t.get(d)? as f64)))
            .collect();
        if pairs.len() == 7 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = pearson_r(&xs, &ys)?;
            points.push(CorrelationPoint {
                station_id: truth.station_id.clone(),
                week_index: monday.iso_week().week(),
                week_start: monday,
                r,
                undefined: r.is_none(),
                n_days: 7,
            });
        } else if !pairs.is_empty() {
            skipped_weeks.push(monday);
        }
        monday = monday + Days::new(7);
    }
    Ok(WeeklyCorrelations {
        station_id: truth.station_id.clone(),
        points,
        skipped_weeks,
    })
}

/// Five-number summary of the defined r values; undefined ones are counted
/// separately. Quantiles interpolate linearly between order statistics
/// (position `(n - 1) p`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub station_id: String,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub n: usize,
    pub n_undefined: usize,
}

pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn box_summary(w: &WeeklyCorrelations) -> BoxSummary {
    let mut rs: Vec<f64> = w.points.iter().filter_map(|p| p.r).collect();
    rs.sort_by(f64::total_cmp);
    BoxSummary {
        station_id: w.station_id.clone(),
        min: rs.first().copied(),
        q1: quantile(&rs, 0.25),
        median: quantile(&rs, 0.5),
        q3: quantile(&rs, 0.75),
        max: rs.last().copied(),
        n: rs.len(),
        n_undefined: w.points.len() - rs.len(),
    }
}

/// Daily counts of `sign` crossings of `gate` by the trips, by local date.
/// Days in `span` (inclusive) without crossings appear with count 0; without
/// a span the series covers the first to last crossing date.
pub fn probe_daily_counts(
    trips: &[Trip],
    gate: &Gate,
    sign: i8,
    station_id: &str,
    tz: Tz,
    span: Option<(NaiveDate, NaiveDate)>,
) -> DailyCountSeries {
    use rayon::prelude::*;
    let dates: Vec<NaiveDate> = trips
        .par_iter()
        .flat_map_iter(|t| {
            detect_crossings(t, gate)
                .into_iter()
                .filter(move |c| c.sign == sign)
                .map(move |c| c.t.with_timezone(&tz).date_naive())
        })
        .collect();
    let mut per_day: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    if let Some((a, b)) = span {
        per_day.insert(a, 0);
        per_day.insert(b, 0);
    }
    for d in dates {
        if span.is_none_or(|(a, b)| a <= d && d <= b) {
            *per_day.entry(d).or_insert(0) += 1;
        }
    }
    DailyCountSeries {
        station_id: station_id.to_string(),
        timezone: tz.name().to_string(),
        days: crate::ingest::fill_span(&per_day),
    }
}
