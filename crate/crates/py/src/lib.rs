//! Python bindings. Structured values cross the boundary as JSON: inputs may
//! be a JSON string or any object `json.dumps` accepts, outputs are plain
//! dicts and lists.

use std::error::Error;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;
use tripgate::gates::{CompiledQuery, Gate, QueryDocument};
use tripgate::ingest::{read_counts, read_trips, write_counts, write_trips, CountRecord, Trip, DEFAULT_CMV_CLASSES};
use tripgate::matcher::{read_matched, MatchParams, MatchedTrip};
use tripgate::network::RoadNetwork;
use tripgate::pipeline::{analyze, analyze_unmatched, validate_from_counts, AnalysisReport};
use tripgate::synth::case_studies::{case_study_1, case_study_2};
use tripgate::synth::{generate_on, write_truth, ScenarioSpec};

create_exception!(tripgate, TripgateError, PyException, "Invalid input or a failed analysis.");

/// OSError when an I/O failure is anywhere in the chain, TripgateError otherwise.
fn to_py(e: impl Error + 'static) -> PyErr {
    let mut src: Option<&(dyn Error + 'static)> = Some(&e);
    while let Some(s) = src {
        if let Some(io) = s.downcast_ref::<std::io::Error>() {
            return PyOSError::new_err(format!("{e} ({io})"));
        }
        src = s.source();
    }
    TripgateError::new_err(e.to_string())
}

fn json_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(s.to_str()?.to_owned());
    }
    let dumped = obj.py().import("json")?.call_method1("dumps", (obj,))?;
    dumped.extract()
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>, what: &str) -> PyResult<T> {
    serde_json::from_str(&json_text(obj)?).map_err(|e| TripgateError::new_err(format!("{what}: {e}")))
}

fn to_py_value<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(to_py)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn compile(obj: &Bound<'_, PyAny>) -> PyResult<CompiledQuery> {
    QueryDocument::from_json(&json_text(obj)?)
        .and_then(|d| d.compile())
        .map_err(to_py)
}

/// A road network: a fixture name or a GeoJSON file.
#[pyclass(frozen, module = "tripgate")]
struct Network {
    inner: RoadNetwork,
}

#[pymethods]
impl Network {
    #[new]
    fn new(name_or_path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: tripgate::fixtures::load(name_or_path).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.nodes().len()
    }

    #[getter]
    fn n_segments(&self) -> usize {
        self.inner.segments().len()
    }

    /// `(segment_id, distance_m)` pairs, nearest first.
    #[pyo3(signature = (lon, lat, radius_m = 50.0, k = 8))]
    fn nearest_segments(&self, lon: f64, lat: f64, radius_m: f64, k: usize) -> Vec<(String, f64)> {
        self.inner.nearest_segments(tripgate::geo::LonLat::new(lon, lat), radius_m, k)
    }

    /// Segment ids from `from_segment` to `to_segment`, or None when unreachable.
    fn shortest_path(&self, from_segment: &str, to_segment: &str) -> PyResult<Option<Vec<String>>> {
        self.inner.shortest_path_ids(from_segment, to_segment).map_err(to_py)
    }

    /// A gate dict across the middle of a segment; travel along it crosses with sign +1.
    #[pyo3(signature = (segment_id, gate_id = None, half_width_m = 30.0))]
    fn gate_across<'py>(
        &self,
        py: Python<'py>,
        segment_id: &str,
        gate_id: Option<&str>,
        half_width_m: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let ix = self.inner.require_seg(segment_id).map_err(to_py)?;
        let gate = Gate::across_segment(gate_id.unwrap_or(segment_id), self.inner.segment(ix), half_width_m);
        to_py_value(py, &gate)
    }

    fn to_geojson<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_value(py, &self.inner.to_geojson())
    }

    fn __repr__(&self) -> String {
        format!("Network({} nodes, {} segments)", self.n_nodes(), self.n_segments())
    }
}

/// Trips on a network, with optional pre-matched paths and station counts.
#[pyclass(frozen, module = "tripgate")]
struct Corpus {
    network: RoadNetwork,
    trips: Vec<Trip>,
    matched: Option<Vec<MatchedTrip>>,
    counts: Option<Vec<CountRecord>>,
}

#[pymethods]
impl Corpus {
    #[new]
    #[pyo3(signature = (network, trips, matched = None, counts = None))]
    fn new(network: &str, trips: PathBuf, matched: Option<PathBuf>, counts: Option<PathBuf>) -> PyResult<Self> {
        Ok(Self {
            network: tripgate::fixtures::load(network).map_err(to_py)?,
            trips: read_trips(&trips).map_err(to_py)?,
            matched: matched.map(read_matched).transpose().map_err(to_py)?,
            counts: counts.map(read_counts).transpose().map_err(to_py)?,
        })
    }

    #[getter]
    fn n_trips(&self) -> usize {
        self.trips.len()
    }

    /// Ids of the trips that satisfy the query, in input order.
    fn filter(&self, py: Python<'_>, query: &Bound<'_, PyAny>) -> PyResult<Vec<String>> {
        let q = compile(query)?;
        let ts = py.detach(|| q.filter(&self.trips));
        Ok(ts.entries.into_iter().map(|e| e.trip_id).collect())
    }

    /// The full report for a query document, as a dict.
    fn analyze<'py>(&self, py: Python<'py>, query: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        let q = compile(query)?;
        let report: AnalysisReport = py
            .detach(|| match &self.matched {
                Some(m) => analyze(&self.network, &self.trips, m, &q),
                None => analyze_unmatched(&self.network, &self.trips, &MatchParams::default(), &q).map(|(r, _)| r),
            })
            .map_err(to_py)?;
        to_py_value(py, &report)
    }

    /// Weekly correlation of probe crossings of `gate` with the station's counts.
    #[pyo3(signature = (station_id, gate, tz = tripgate::timefmt::DEFAULT_TZ, cmv_classes = (*DEFAULT_CMV_CLASSES.start(), *DEFAULT_CMV_CLASSES.end())))]
    fn validate<'py>(
        &self,
        py: Python<'py>,
        station_id: &str,
        gate: &Bound<'py, PyAny>,
        tz: &str,
        cmv_classes: (u16, u16),
    ) -> PyResult<Bound<'py, PyAny>> {
        let gate: Gate = from_py(gate, "gate")?;
        gate.validate().map_err(to_py)?;
        let counts = self
            .counts
            .as_deref()
            .ok_or_else(|| TripgateError::new_err("corpus was loaded without counts"))?;
        let v = py
            .detach(|| validate_from_counts(&self.trips, &gate, counts, station_id, cmv_classes.0..=cmv_classes.1, tz))
            .map_err(to_py)?;
        to_py_value(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} trips, matched={})", self.trips.len(), self.matched.is_some())
    }
}

/// Hex digest identifying a query document independent of formatting.
#[pyfunction]
fn query_hash(query: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(compile(query)?.hash)
}

/// Share differences between two reports (or share tables), B minus A.
#[pyfunction]
fn compare<'py>(a: &Bound<'py, PyAny>, b: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let table = |x: &Bound<'py, PyAny>| -> PyResult<tripgate::analytics::RouteShareTable> {
        let v: serde_json::Value = from_py(x, "report")?;
        let shares = v.get("shares").cloned().unwrap_or(v);
        serde_json::from_value(shares).map_err(|e| TripgateError::new_err(format!("share table: {e}")))
    };
    let c = tripgate::analytics::compare_periods(&table(a)?, &table(b)?);
    to_py_value(a.py(), &c)
}

/// Terminal rendering of a report's share table.
#[pyfunction]
fn shares_text(report: &Bound<'_, PyAny>) -> PyResult<String> {
    let r: AnalysisReport = from_py(report, "report")?;
    Ok(tripgate::report::shares_text(&r.shares))
}

fn write_corpus(
    dir: &std::path::Path,
    net: &RoadNetwork,
    trips: &[Trip],
    truth: &[tripgate::synth::TruthTrip],
    counts: &[CountRecord],
) -> PyResult<()> {
    let create = |name: &str| std::fs::File::create(dir.join(name)).map(std::io::BufWriter::new);
    std::fs::create_dir_all(dir).map_err(to_py)?;
    net.write_geojson(dir.join("network.geojson")).map_err(to_py)?;
    write_trips(create("trips.csv").map_err(to_py)?, trips).map_err(to_py)?;
    write_truth(create("truth.csv").map_err(to_py)?, truth).map_err(to_py)?;
    write_counts(create("counts.csv").map_err(to_py)?, counts).map_err(to_py)
}

/// Generates a scenario into `out_dir`; returns the number of probe trips
/// and count records.
#[pyfunction]
fn generate(py: Python<'_>, spec: &Bound<'_, PyAny>, out_dir: PathBuf) -> PyResult<(usize, usize)> {
    let spec = ScenarioSpec::from_json(&json_text(spec)?).map_err(to_py)?;
    let (net, out) = py
        .detach(|| {
            let net = spec.load_network()?;
            let out = generate_on(&net, &spec)?;
            Ok::<_, tripgate::synth::SynthError>((net, out))
        })
        .map_err(to_py)?;
    write_corpus(&out_dir, &net, &out.trips, &out.truth, &out.counts)?;
    Ok((out.trips.len(), out.counts.len()))
}

/// Writes a bundled case study and its query documents into `out_dir`;
/// returns the query names.
#[pyfunction]
fn case_study(py: Python<'_>, name: &str, out_dir: PathBuf) -> PyResult<Vec<String>> {
    let cs = match name {
        "case-study-1" => py.detach(case_study_1),
        "case-study-2" => py.detach(case_study_2),
        other => return Err(TripgateError::new_err(format!("unknown case study {other:?}"))),
    };
    write_corpus(&out_dir, &cs.network, &cs.trips, &cs.truth, &[])?;
    for (q, doc) in &cs.queries {
        std::fs::write(out_dir.join(format!("query-{q}.json")), doc.to_json_pretty() + "\n").map_err(to_py)?;
    }
    Ok(cs.queries.iter().map(|(q, _)| q.clone()).collect())
}

/// Probe-trajectory route choice analysis with virtual gates.
#[pymodule(name = "tripgate")]
mod tripgate_py {
    #[pymodule_export]
    use super::{case_study, compare, generate, query_hash, shares_text, Corpus, Network, TripgateError};

    #[pymodule_init]
    fn init(m: &pyo3::Bound<'_, pyo3::types::PyModule>) -> pyo3::PyResult<()> {
        use pyo3::types::PyModuleMethods;
        m.add("__version__", env!("CARGO_PKG_VERSION"))
    }
}
