//! Route shares, period comparisons, travel times, hourly detour rates and
//! probe-versus-station correlations.

mod correlation;
mod shares;
mod travel;

use thiserror::Error;

pub use correlation::{
    box_summary, pearson_r, probe_daily_counts, quantile, weekly_correlations, BoxSummary, CorrelationPoint,
    WeeklyCorrelations,
};
pub use shares::{
    compare_periods, display_tenths, format_tenths, route_share_table, ComparisonRow, RouteShareTable, ShareComparison,
    ShareRow,
};
pub use travel::{
    detour_rate, hourly_route_counts, travel_minutes, travel_time_stats, DetourRate, HourlyRouteCounts, TravelTimeRow,
    TravelTimeStats,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("probe and truth series share no dates")]
    NoOverlap,
}
