//! GeoJSON network interchange.
//!
//! Point features are nodes with `{"id"}`. LineString features are roads with
//! `{"id", "from", "to", "name", "class", "oneway"}`; `name` defaults to the
//! empty string, `class` to `"other"`, `oneway` to `false`. An optional
//! `length_m` is checked against the computed geometry length (1%).

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{Node, NetworkError, Road, RoadClass, RoadNetwork, SegIx};
use crate::geo::{polyline_length_m, LonLat};

#[derive(Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Deserialize)]
struct Feature {
    geometry: Geometry,
    #[serde(default)]
    properties: Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum Geometry {
    Point { coordinates: LonLat },
    LineString { coordinates: Vec<LonLat> },
}

fn id_prop(props: &Map<String, Value>, key: &str, ctx: &str) -> Result<String, NetworkError> {
    match props.get(key) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(NetworkError::Parse(format!("{ctx}: missing or invalid \"{key}\""))),
    }
}

impl RoadNetwork {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_geojson_str(&text)
    }

    pub fn from_geojson_str(text: &str) -> Result<Self, NetworkError> {
        let fc: FeatureCollection =
            serde_json::from_str(text).map_err(|e| NetworkError::Parse(e.to_string()))?;
        if fc.kind != "FeatureCollection" {
            return Err(NetworkError::Parse(format!(
                "expected FeatureCollection, found {}",
                fc.kind
            )));
        }
        let mut nodes = Vec::new();
        let mut roads = Vec::new();
        for (i, f) in fc.features.into_iter().enumerate() {
            let ctx = format!("feature {i}");
            match f.geometry {
                Geometry::Point { coordinates } => nodes.push(Node {
                    id: id_prop(&f.properties, "id", &ctx)?,
                    pos: coordinates,
                }),
                Geometry::LineString { coordinates } => {
                    let p = &f.properties;
                    let id = id_prop(p, "id", &ctx)?;
                    let class = match p.get("class") {
                        None | Some(Value::Null) => RoadClass::Other,
                        Some(v) => serde_json::from_value(v.clone())
                            .map_err(|e| NetworkError::Parse(format!("{ctx}: class: {e}")))?,
                    };
                    let oneway = match p.get("oneway") {
                        None | Some(Value::Null) => false,
                        Some(Value::Bool(b)) => *b,
                        Some(v) => {
                            return Err(NetworkError::Parse(format!("{ctx}: oneway must be boolean, got {v}")))
                        }
                    };
                    let name = match p.get("name") {
                        None | Some(Value::Null) => String::new(),
                        Some(Value::String(s)) => s.clone(),
                        Some(v) => {
                            return Err(NetworkError::Parse(format!("{ctx}: name must be a string, got {v}")))
                        }
                    };
                    if let Some(declared) = p.get("length_m").and_then(Value::as_f64) {
                        let actual = polyline_length_m(&coordinates);
                        if (declared - actual).abs() > 0.01 * actual {
                            return Err(NetworkError::Geometry {
                                id,
                                reason: format!("declared length {declared} m differs from geometry {actual:.1} m"),
                            });
                        }
                    }
                    roads.push(Road {
                        from: id_prop(p, "from", &ctx)?,
                        to: id_prop(p, "to", &ctx)?,
                        id,
                        geometry: coordinates,
                        name,
                        class,
                        oneway,
                    });
                }
            }
        }
        Self::new(nodes, roads)
    }

    /// The interchange document this network was built from (nodes, then roads,
    /// both in id order).
    pub fn to_geojson(&self) -> Value {
        let mut features = Vec::with_capacity(self.nodes.len() + self.roads.len());
        for n in &self.nodes {
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": n.pos},
                "properties": {"id": n.id},
            }));
        }
        for r in &self.roads {
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": r.geometry},
                "properties": {
                    "id": r.id, "from": r.from, "to": r.to,
                    "name": r.name, "class": r.class, "oneway": r.oneway,
                },
            }));
        }
        json!({"type": "FeatureCollection", "features": features})
    }

    pub fn write_geojson(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_geojson()).expect("json");
        std::fs::write(path, text + "\n")
    }

    /// Directed segments as GeoJSON features, for map display.
    pub fn segments_geojson(&self, segs: &[SegIx]) -> Value {
        let features: Vec<Value> = segs
            .iter()
            .map(|&ix| {
                let s = self.segment(ix);
                json!({
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": s.geometry},
                    "properties": {
                        "id": s.id,
                        "from": self.node(s.from_node).id,
                        "to": self.node(s.to_node).id,
                        "name": s.name,
                        "class": s.road_class,
                        "oneway": s.oneway,
                        "length_m": s.length_m,
                    },
                })
            })
            .collect();
        json!({"type": "FeatureCollection", "features": features})
    }
}
