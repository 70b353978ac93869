//! Probe trajectory analytics: conflate GPS trips onto a directed road
//! network, select trips by directed gates, fold their paths into route sets
//! and compute route shares, travel times, detour rates and validation
//! correlations against count stations.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod fixtures;
pub mod gates;
pub mod geo;
pub mod ingest;
pub mod matcher;
pub mod network;
pub mod pipeline;
pub mod report;
pub mod routes;
pub mod synth;
pub mod timefmt;
