use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;
use tokio::sync::OnceCell;
use tripgate::fixtures;
use tripgate::gates::CompiledQuery;
use tripgate::ingest::{read_counts, read_trips, CountRecord, IngestError, Trip};
use tripgate::matcher::{read_matched, MatchParams, MatchedTrip};
use tripgate::network::{NetworkError, RoadNetwork};
use tripgate::pipeline::{analyze, analyze_unmatched, AnalysisReport, PipelineError};

use crate::config::CorpusConfig;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("corpus {corpus}: {source}")]
    Network {
        corpus: String,
        #[source]
        source: NetworkError,
    },
    #[error("corpus {corpus}: {source}")]
    Ingest {
        corpus: String,
        #[source]
        source: IngestError,
    },
}

/// A read-only network plus trips, with optional counts and matched paths.
#[derive(Debug)]
pub struct Corpus {
    pub config: CorpusConfig,
    pub network: RoadNetwork,
    pub trips: Vec<Trip>,
    pub counts: Option<Vec<CountRecord>>,
    pub matched: Option<Vec<MatchedTrip>>,
}

impl Corpus {
    pub fn load(config: &CorpusConfig) -> Result<Self, LoadError> {
        let ingest = |source| LoadError::Ingest {
            corpus: config.name.clone(),
            source,
        };
        let network = fixtures::load(&config.network).map_err(|source| LoadError::Network {
            corpus: config.name.clone(),
            source,
        })?;
        let trips = read_trips(&config.trips).map_err(ingest)?;
        let counts = config.counts.as_ref().map(read_counts).transpose().map_err(ingest)?;
        let matched = config.matched.as_ref().map(read_matched).transpose().map_err(ingest)?;
        Ok(Self {
            config: config.clone(),
            network,
            trips,
            counts,
            matched,
        })
    }

    /// The single analysis path shared with the command line: pre-matched
    /// paths when the corpus has them, otherwise match the filtered trips.
    pub fn analyze(&self, query: &CompiledQuery, params: &MatchParams) -> Result<AnalysisReport, PipelineError> {
        match &self.matched {
            Some(m) => analyze(&self.network, &self.trips, m, query),
            None => analyze_unmatched(&self.network, &self.trips, params, query).map(|(r, _)| r),
        }
    }

    pub fn summary(&self) -> serde_json::Value {
        let stations: BTreeSet<&str> = self
            .counts
            .iter()
            .flatten()
            .map(|c| c.station_id.as_str())
            .collect();
        serde_json::json!({
            "name": self.config.name,
            "trips": self.trips.len(),
            "nodes": self.network.nodes().len(),
            "segments": self.network.segments().len(),
            "stations": stations,
            "matched": self.matched.is_some(),
        })
    }
}

/// A finished query: the report and its serialized body.
#[derive(Debug)]
pub struct CachedReport {
    pub report: AnalysisReport,
    pub body: String,
}

type CacheKey = (String, String);

/// Loaded corpora and the per-(corpus, query hash) result cache. Each cache
/// slot is computed once; concurrent requests for the same key wait on it.
#[derive(Debug, Default)]
pub struct AppState {
    pub params: MatchParams,
    corpora: RwLock<BTreeMap<String, Arc<Corpus>>>,
    cache: Mutex<HashMap<CacheKey, Arc<OnceCell<Arc<CachedReport>>>>>,
}

impl AppState {
    pub fn new(params: MatchParams) -> Self {
        Self {
            params,
            ..Self::default()
        }
    }

    /// Adds a corpus; `false` when the name is taken.
    pub fn insert(&self, corpus: Corpus) -> bool {
        let mut map = self.corpora.write().expect("corpus lock");
        if map.contains_key(&corpus.config.name) {
            return false;
        }
        map.insert(corpus.config.name.clone(), Arc::new(corpus));
        true
    }

    pub fn corpus_names(&self) -> Vec<String> {
        self.corpora.read().expect("corpus lock").keys().cloned().collect()
    }

    pub fn corpora(&self) -> Vec<Arc<Corpus>> {
        self.corpora.read().expect("corpus lock").values().cloned().collect()
    }

    pub fn corpus(&self, name: &str) -> Option<Arc<Corpus>> {
        self.corpora.read().expect("corpus lock").get(name).cloned()
    }

    pub fn slot(&self, corpus: &str, hash: &str) -> Arc<OnceCell<Arc<CachedReport>>> {
        let mut cache = self.cache.lock().expect("cache lock");
        cache
            .entry((corpus.to_string(), hash.to_string()))
            .or_default()
            .clone()
    }

    /// A finished result, if any.
    pub fn cached(&self, corpus: &str, hash: &str) -> Option<Arc<CachedReport>> {
        let cache = self.cache.lock().expect("cache lock");
        cache.get(&(corpus.to_string(), hash.to_string()))?.get().cloned()
    }

    pub fn cached_count(&self) -> usize {
        self.cache.lock().expect("cache lock").values().filter(|c| c.initialized()).count()
    }
}
