//! HTTP/JSON service over loaded corpora. Every endpoint is a thin adapter
//! over library calls; query results are cached per (corpus, query hash).
//!
//! | Method | Path                 | Body / parameters                                   |
//! |--------|----------------------|-----------------------------------------------------|
//! | GET    | `/api/v1/status`     |                                                     |
//! | POST   | `/api/v1/query`      | query document; `?corpus=`                          |
//! | POST   | `/api/v1/compare`    | `{"a": query_id, "b": query_id, "corpus"?}`         |
//! | POST   | `/api/v1/validate`   | `{"station_id", "gate", "tz"?, "cmv_classes"?, "corpus"?}` |
//! | GET    | `/api/v1/network`    | `?corpus=&bbox=min_lon,min_lat,max_lon,max_lat`     |
//! | POST   | `/api/v1/load`       | corpus config `{"name", "network", "trips", ...}`   |

mod config;
mod error;
mod state;

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;
use tokio::net::TcpListener;
use tripgate::analytics::compare_periods;
use tripgate::gates::{Gate, QueryDocument};
use tripgate::geo::LonLat;
use tripgate::ingest::DEFAULT_CMV_CLASSES;
use tripgate::pipeline::validate_from_counts;
use tripgate::timefmt::DEFAULT_TZ;

pub use config::{CorpusConfig, ServiceConfig, DEFAULT_BIND};
pub use error::ApiError;
pub use state::{AppState, CachedReport, Corpus, LoadError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("corpus name {0} is used twice")]
    DuplicateCorpus(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// Loads every configured corpus.
pub fn state_from_config(config: &ServiceConfig) -> Result<AppState, ServiceError> {
    let state = AppState::new(config.matching);
    for c in &config.corpora {
        if !state.insert(Corpus::load(c)?) {
            return Err(ServiceError::DuplicateCorpus(c.name.clone()));
        }
    }
    Ok(state)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/status", get(status))
        .route("/api/v1/query", post(query))
        .route("/api/v1/compare", post(compare))
        .route("/api/v1/validate", post(validate))
        .route("/api/v1/network", get(network))
        .route("/api/v1/load", post(load))
        .fallback(fallback)
        .with_state(state)
}

/// A bound listener with its router, ready to run.
pub struct Server {
    listener: TcpListener,
    router: Router,
}

impl Server {
    pub async fn bind(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let cfg = config.clone();
        let state = tokio::task::spawn_blocking(move || state_from_config(&cfg))
            .await
            .map_err(|e| ServiceError::Config(format!("loader panicked: {e}")))??;
        let listener = TcpListener::bind(&config.bind).await.map_err(|source| ServiceError::Bind {
            addr: config.bind.clone(),
            source,
        })?;
        Ok(Self {
            listener,
            router: router(Arc::new(state)),
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until Ctrl-C.
    pub async fn run(self) -> std::io::Result<()> {
        axum::serve(self.listener, self.router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    }
}

fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("parse_error", e.to_string()))
}

fn resolve(state: &AppState, name: Option<&str>) -> Result<Arc<state::Corpus>, ApiError> {
    match name {
        Some(n) => state
            .corpus(n)
            .ok_or_else(|| ApiError::not_found("unknown_corpus", format!("no corpus named {n}"))),
        None => {
            let all = state.corpora();
            match all.as_slice() {
                [only] => Ok(only.clone()),
                [] => Err(ApiError::not_found("unknown_corpus", "no corpus is loaded")),
                _ => Err(ApiError::bad_request(
                    "corpus_required",
                    format!("several corpora are loaded ({}); pass corpus", state.corpus_names().join(", ")),
                )),
            }
        }
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn status(State(st): State<Arc<AppState>>) -> Response {
    let corpora: Vec<serde_json::Value> = st.corpora().iter().map(|c| c.summary()).collect();
    let body = serde_json::json!({
        "service": "tripgate",
        "version": env!("CARGO_PKG_VERSION"),
        "corpora": corpora,
        "cached_queries": st.cached_count(),
    });
    json_body(StatusCode::OK, body.to_string())
}

#[derive(Debug, Deserialize)]
struct CorpusParam {
    corpus: Option<String>,
}

async fn query(State(st): State<Arc<AppState>>, Query(p): Query<CorpusParam>, body: Bytes) -> Result<Response, ApiError> {
    let corpus = resolve(&st, p.corpus.as_deref())?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("parse_error", "body is not UTF-8"))?;
    let compiled = QueryDocument::from_json(text)?.compile()?;
    let hash = compiled.hash.clone();
    let slot = st.slot(&corpus.config.name, &hash);
    let computed = AtomicBool::new(false);
    let cached = slot
        .get_or_try_init(|| async {
            computed.store(true, Ordering::Relaxed);
            let params = st.params;
            blocking(move || {
                let report = corpus.analyze(&compiled, &params)?;
                Ok(Arc::new(CachedReport {
                    body: report.to_json_pretty(),
                    report,
                }))
            })
            .await
        })
        .await?;
    let mut resp = json_body(StatusCode::OK, cached.body.clone());
    let h = resp.headers_mut();
    h.insert("x-query-id", HeaderValue::from_str(&hash).expect("hex is a valid header"));
    let cache = if computed.load(Ordering::Relaxed) { "miss" } else { "hit" };
    h.insert("x-cache", HeaderValue::from_static(cache));
    Ok(resp)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRequest {
    a: String,
    b: String,
    #[serde(default)]
    corpus: Option<String>,
}

async fn compare(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CompareRequest = parse_body(&body)?;
    let corpus = resolve(&st, req.corpus.as_deref())?;
    let get = |id: &str| {
        st.cached(&corpus.config.name, id).ok_or_else(|| {
            ApiError::not_found("unknown_query", format!("no stored result for query {id}; POST it to /api/v1/query first"))
        })
    };
    let (a, b) = (get(&req.a)?, get(&req.b)?);
    let c = compare_periods(&a.report.shares, &b.report.shares);
    Ok(json_body(StatusCode::OK, serde_json::to_string_pretty(&c).expect("comparison serializes")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    station_id: String,
    gate: Gate,
    #[serde(default)]
    tz: Option<String>,
    #[serde(default)]
    cmv_classes: Option<[u16; 2]>,
    #[serde(default)]
    corpus: Option<String>,
}

async fn validate(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: ValidateRequest = parse_body(&body)?;
    req.gate.validate()?;
    let corpus = resolve(&st, req.corpus.as_deref())?;
    if corpus.counts.is_none() {
        return Err(ApiError::unprocessable(
            "no_counts",
            format!("corpus {} has no station counts", corpus.config.name),
        ));
    }
    let classes = req.cmv_classes.map_or(DEFAULT_CMV_CLASSES, |[a, b]| a..=b);
    let tz = req.tz.unwrap_or_else(|| DEFAULT_TZ.to_string());
    let report = blocking(move || {
        let counts = corpus.counts.as_deref().unwrap_or_default();
        Ok(validate_from_counts(&corpus.trips, &req.gate, counts, &req.station_id, classes, &tz)?)
    })
    .await?;
    Ok(json_body(StatusCode::OK, serde_json::to_string_pretty(&report).expect("report serializes")))
}

#[derive(Debug, Deserialize)]
struct NetworkParam {
    corpus: Option<String>,
    bbox: Option<String>,
}

fn parse_bbox(s: &str) -> Result<(LonLat, LonLat), ApiError> {
    let bad = || ApiError::bad_request("bad_request", format!("bbox must be min_lon,min_lat,max_lon,max_lat, got {s:?}"));
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
    match v.as_slice() {
        &[a, b, c, d] if a <= c && b <= d => Ok((LonLat::new(a, b), LonLat::new(c, d))),
        _ => Err(bad()),
    }
}

async fn network(State(st): State<Arc<AppState>>, Query(p): Query<NetworkParam>) -> Result<Response, ApiError> {
    let corpus = resolve(&st, p.corpus.as_deref())?;
    let net = &corpus.network;
    let segs = match p.bbox.as_deref() {
        Some(b) => {
            let (lo, hi) = parse_bbox(b)?;
            net.segments_in_bbox(lo, hi)
        }
        None => (0..net.segments().len() as u32).map(tripgate::network::SegIx).collect(),
    };
    Ok(json_body(StatusCode::OK, net.segments_geojson(&segs).to_string()))
}

async fn load(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let cfg: CorpusConfig = parse_body(&body)?;
    if st.corpus(&cfg.name).is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("corpus {} is already loaded", cfg.name)));
    }
    let corpus = blocking(move || Ok(Corpus::load(&cfg)?)).await?;
    let summary = corpus.summary();
    let name = corpus.config.name.clone();
    if !st.insert(corpus) {
        return Err(ApiError::new(StatusCode::CONFLICT, "conflict", format!("corpus {name} is already loaded")));
    }
    Ok(json_body(StatusCode::CREATED, summary.to_string()))
}

async fn fallback(method: Method, uri: Uri) -> ApiError {
    ApiError::not_found("not_found", format!("no endpoint {method} {}", uri.path()))
}
