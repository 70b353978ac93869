use serde::{Deserialize, Serialize};

use crate::routes::RouteSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub label: String,
    pub trips: u64,
    /// Unrounded percentage, `trips * 100 / total`.
    pub share_pct: f64,
    /// Displayed percentage in tenths of a percent.
    pub display_tenths: i64,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RouteShareTable {
    pub rows: Vec<ShareRow>,
    pub total: u64,
}

/// `num / den` rounded half away from zero (both non-negative).
fn round_div(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Display rule: shares of at least 1% as whole percent, smaller ones to one
/// decimal. Computed exactly from the counts.
pub fn display_tenths(count: u64, total: u64) -> i64 {
    if total == 0 {
        return 0;
    }
    if count * 100 >= total {
        10 * round_div(count * 100, total) as i64
    } else {
        round_div(count * 1000, total) as i64
    }
}

pub fn format_tenths(tenths: i64, unit: &str) -> String {
    if tenths % 10 == 0 {
        format!("{}{unit}", tenths / 10)
    } else {
        let sign = if tenths < 0 { "-" } else { "" };
        format!("{sign}{}.{}{unit}", tenths.abs() / 10, tenths.abs() % 10)
    }
}

impl RouteShareTable {
    /// Rows sorted by count descending, then label.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut counts: Vec<(String, u64)> = counts.into_iter().collect();
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total: u64 = counts.iter().map(|c| c.1).sum();
        let rows = counts
            .into_iter()
            .map(|(label, trips)| {
                let tenths = display_tenths(trips, total);
                ShareRow {
                    label,
                    trips,
                    share_pct: if total > 0 { trips as f64 * 100.0 / total as f64 } else { 0.0 },
                    display_tenths: tenths,
                    display: format_tenths(tenths, "%"),
                }
            })
            .collect();
        Self { rows, total }
    }

    pub fn row(&self, label: &str) -> Option<&ShareRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

pub fn route_share_table(sets: &[RouteSet]) -> RouteShareTable {
    RouteShareTable::from_counts(sets.iter().map(|s| (s.label.clone(), s.members.len() as u64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub share_a: f64,
    pub share_b: f64,
    /// `share_b - share_a` in percentage points, unrounded.
    pub delta_pp: f64,
    /// Difference of the displayed shares, in tenths of a point.
    pub display_delta_tenths: i64,
    pub display_delta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ShareComparison {
    pub rows: Vec<ComparisonRow>,
}

/// Per-label share change from `a` to `b`. Labels missing from one table
/// count as 0%. Rows follow `a`'s order, then labels only in `b`.
pub fn compare_periods(a: &RouteShareTable, b: &RouteShareTable) -> ShareComparison {
    let mut labels: Vec<&str> = a.rows.iter().map(|r| r.label.as_str()).collect();
    labels.extend(b.rows.iter().map(|r| r.label.as_str()).filter(|l| a.row(l).is_none()));
    let rows = labels
        .into_iter()
        .map(|label| {
            let (sa, da) = a.row(label).map_or((0.0, 0), |r| (r.share_pct, r.display_tenths));
            let (sb, db) = b.row(label).map_or((0.0, 0), |r| (r.share_pct, r.display_tenths));
            let dt = db - da;
            let sign = if dt > 0 { "+" } else { "" };
            ComparisonRow {
                label: label.to_string(),
                share_a: sa,
                share_b: sb,
                delta_pp: sb - sa,
                display_delta_tenths: dt,
                display_delta: format!("{sign}{}", format_tenths(dt, " pp")),
            }
        })
        .collect();
    ShareComparison { rows }
}
