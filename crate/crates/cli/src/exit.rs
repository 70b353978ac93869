//! Exit codes. Documented in the README; keep the two in sync.

use std::error::Error;

use tripgate::analytics::AnalyticsError;
use tripgate::gates::GateError;
use tripgate::ingest::IngestError;
use tripgate::network::NetworkError;
use tripgate::pipeline::PipelineError;
use tripgate::report::ReportError;
use tripgate::synth::SynthError;
use tripgate_service::{LoadError, ServiceError};

pub const OK: u8 = 0;
pub const OTHER: u8 = 1;
pub const USAGE: u8 = 2;
pub const IO: u8 = 3;
pub const SCHEMA: u8 = 4;
pub const ANALYSIS: u8 = 5;

/// A flag combination clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Error for UsageError {}

fn ingest(e: &IngestError) -> u8 {
    match e {
        IngestError::Io { .. } => IO,
        IngestError::Empty | IngestError::MixedStations(..) => ANALYSIS,
        _ => SCHEMA,
    }
}

fn network(e: &NetworkError) -> u8 {
    match e {
        NetworkError::Io { .. } => IO,
        _ => SCHEMA,
    }
}

fn pipeline(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Gate(_) => SCHEMA,
        PipelineError::Ingest(i) => ingest(i),
        _ => ANALYSIS,
    }
}

fn one(e: &(dyn Error + 'static)) -> Option<u8> {
    if let Some(x) = e.downcast_ref::<UsageError>() {
        let _ = x;
        return Some(USAGE);
    }
    if e.is::<std::io::Error>() {
        return Some(IO);
    }
    if let Some(x) = e.downcast_ref::<IngestError>() {
        return Some(ingest(x));
    }
    if let Some(x) = e.downcast_ref::<NetworkError>() {
        return Some(network(x));
    }
    if e.is::<GateError>() || e.is::<serde_json::Error>() {
        return Some(SCHEMA);
    }
    if let Some(x) = e.downcast_ref::<PipelineError>() {
        return Some(pipeline(x));
    }
    if e.is::<AnalyticsError>() {
        return Some(ANALYSIS);
    }
    if let Some(x) = e.downcast_ref::<ReportError>() {
        return Some(match x {
            ReportError::Io { .. } => IO,
            ReportError::Parse { .. } => SCHEMA,
        });
    }
    if let Some(x) = e.downcast_ref::<SynthError>() {
        return Some(match x {
            SynthError::Io { .. } => IO,
            SynthError::Spec(_) => SCHEMA,
            SynthError::Network(n) => network(n),
            SynthError::Unreachable { .. } | SynthError::MissingAlternate { .. } => ANALYSIS,
        });
    }
    if let Some(x) = e.downcast_ref::<ServiceError>() {
        return Some(match x {
            ServiceError::Io { .. } | ServiceError::Bind { .. } => IO,
            ServiceError::Config(_) | ServiceError::DuplicateCorpus(_) => SCHEMA,
            ServiceError::Load(LoadError::Network { source, .. }) => network(source),
            ServiceError::Load(LoadError::Ingest { source, .. }) => ingest(source),
        });
    }
    None
}

/// The code of the outermost recognised error in the chain.
pub fn code(err: &anyhow::Error) -> u8 {
    err.chain().find_map(one).unwrap_or(OTHER)
}
