//! The query document: gates, study area, gate sequence and analysis knobs
//! in one JSON object. The CLI, the service and the Python bindings all accept
//! exactly this shape.
//!
//! ```json
//! {
//!   "gates": [{"gate_id": "up", "line": [[-77.3, 39.3], [-77.2, 39.3]]}],
//!   "study_area": [[lon, lat], ...],
//!   "gate_sequence": [{"gate_id": "up", "sign": 1}],
//!   "time_window": {"start": "2022-04-11T00:00:00Z", "end": "2022-04-12T00:00:00Z"},
//!   "require_order": true,
//!   "vehicle_class": "cmv",
//!   "fold_theta": 0.9,
//!   "tz": "America/New_York",
//!   "hour_bin_minutes": 60
//! }
//! ```

use std::collections::HashMap;

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Gate, GateError, GateRequirement, StudyArea, TimeWindow, TripQuery};
use crate::ingest::VehicleClass;
use crate::timefmt::{parse_tz, DEFAULT_TZ};

pub use crate::routes::DEFAULT_THETA;
pub const DEFAULT_HOUR_BIN_MINUTES: u32 = 60;

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDocument {
    pub gates: Vec<Gate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_area: Option<StudyArea>,
    pub gate_sequence: Vec<GateRequirement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<TimeWindow>,
    #[serde(default = "yes")]
    pub require_order: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_class: Option<VehicleClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tz: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hour_bin_minutes: Option<u32>,
}

impl QueryDocument {
    pub fn from_json(text: &str) -> Result<Self, GateError> {
        serde_json::from_str(text).map_err(|e| GateError::Parse(e.to_string()))
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self, GateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GateError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("query document serializes")
    }

    /// Hex SHA-256 of the normalized serialization, so formatting and key
    /// order in the source text do not change the hash.
    pub fn canonical_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("query document serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn compile(&self) -> Result<CompiledQuery, GateError> {
        let mut by_id: HashMap<&str, &Gate> = HashMap::new();
        for g in &self.gates {
            g.validate()?;
            if by_id.insert(g.gate_id.as_str(), g).is_some() {
                return Err(GateError::DuplicateGate(g.gate_id.clone()));
            }
        }
        let sequence_gates = self
            .gate_sequence
            .iter()
            .map(|r| {
                by_id
                    .get(r.gate_id.as_str())
                    .map(|g| (*g).clone())
                    .ok_or_else(|| GateError::UnknownGate(r.gate_id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let query = TripQuery {
            study_area: self.study_area.clone(),
            gate_sequence: self.gate_sequence.clone(),
            time_window: self.time_window,
            require_order: self.require_order,
            vehicle_class: self.vehicle_class,
        };
        query.validate()?;

        let theta = self.fold_theta.unwrap_or(DEFAULT_THETA);
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(GateError::InvalidParameter(format!("fold_theta must be in (0, 1], got {theta}")));
        }
        let tz_name = self.tz.clone().unwrap_or_else(|| DEFAULT_TZ.to_string());
        let tz = parse_tz(&tz_name).map_err(GateError::InvalidParameter)?;
        let bin = self.hour_bin_minutes.unwrap_or(DEFAULT_HOUR_BIN_MINUTES);
        if bin == 0 || 1440 % bin != 0 {
            return Err(GateError::InvalidParameter(format!(
                "hour_bin_minutes must divide 1440, got {bin}"
            )));
        }
        Ok(CompiledQuery {
            hash: self.canonical_hash(),
            document: self.clone(),
            sequence_gates,
            query,
            theta,
            tz,
            bin_minutes: bin,
        })
    }
}

/// A validated query document with gate references resolved.
#[derive(Debug, Clone)]
pub struct CompiledQuery {
    pub document: QueryDocument,
    /// One gate per gate-sequence element.
    pub sequence_gates: Vec<Gate>,
    pub query: TripQuery,
    pub theta: f64,
    pub tz: Tz,
    pub bin_minutes: u32,
    pub hash: String,
}

impl CompiledQuery {
    pub fn gate_ids(&self) -> Vec<String> {
        self.query.gate_sequence.iter().map(|r| r.gate_id.clone()).collect()
    }
}
