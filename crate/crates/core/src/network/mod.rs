//! Directed road network: nodes, segments, spatial index and routing.
//!
//! Bidirectional roads are expanded into two directed segments at load time.
//! The forward segment keeps the road id, the reverse one gets
//! [`REVERSE_SUFFIX`] appended. Segments and nodes are stored sorted by id, so
//! comparing [`SegIx`] values orders by segment id.

mod index;
mod io;
mod routing;

use std::collections::HashMap;

use rstar::RTree;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{distance_m, polyline_length_m, LonLat};

pub use index::SegmentProjection;
pub use routing::SearchTree;

pub const REVERSE_SUFFIX: &str = ":r";

/// Endpoint tolerance between a segment's geometry and its nodes.
const ENDPOINT_TOLERANCE_M: f64 = 1.0;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("duplicate segment id {0}")]
    DuplicateSegment(String),
    #[error("segment {segment} references missing node {node}")]
    MissingNode { segment: String, node: String },
    #[error("invalid geometry on {id}: {reason}")]
    Geometry { id: String, reason: String },
    #[error("unknown segment id {0}")]
    UnknownSegment(String),
    #[error("unknown node id {0}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegIx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIx(pub u32);

impl SegIx {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl NodeIx {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Motorway,
    Trunk,
    Primary,
    Secondary,
    Tertiary,
    Ramp,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub pos: LonLat,
}

/// One line feature of the interchange file, before directional expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: String,
    pub from: String,
    pub to: String,
    pub geometry: Vec<LonLat>,
    pub name: String,
    pub class: RoadClass,
    pub oneway: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub from_node: NodeIx,
    pub to_node: NodeIx,
    pub geometry: Vec<LonLat>,
    pub length_m: f64,
    pub name: String,
    pub road_class: RoadClass,
    pub oneway: bool,
}

#[derive(Debug)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    roads: Vec<Road>,
    node_lookup: HashMap<String, NodeIx>,
    seg_lookup: HashMap<String, SegIx>,
    out_segs: Vec<Vec<SegIx>>,
    rtree: RTree<index::IndexedSegment>,
}

impl RoadNetwork {
    /// Validates nodes and roads and builds the directed network.
    pub fn new(mut nodes: Vec<Node>, mut roads: Vec<Road>) -> Result<Self, NetworkError> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(NetworkError::DuplicateNode(w[0].id.clone()));
            }
        }
        for n in &nodes {
            if !n.pos.is_valid() {
                return Err(NetworkError::Geometry {
                    id: n.id.clone(),
                    reason: format!("coordinate out of range: {:?}", n.pos),
                });
            }
        }
        let node_lookup: HashMap<String, NodeIx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), NodeIx(i as u32)))
            .collect();

        roads.sort_by(|a, b| a.id.cmp(&b.id));
        let mut segments = Vec::with_capacity(roads.len() * 2);
        for road in &roads {
            let (from, to) = validate_road(road, &nodes, &node_lookup)?;
            let length_m = polyline_length_m(&road.geometry);
            segments.push(Segment {
                id: road.id.clone(),
                from_node: from,
                to_node: to,
                geometry: road.geometry.clone(),
                length_m,
                name: road.name.clone(),
                road_class: road.class,
                oneway: road.oneway,
            });
            if !road.oneway {
                let mut geometry = road.geometry.clone();
                geometry.reverse();
                segments.push(Segment {
                    id: format!("{}{}", road.id, REVERSE_SUFFIX),
                    from_node: to,
                    to_node: from,
                    geometry,
                    length_m,
                    name: road.name.clone(),
                    road_class: road.class,
                    oneway: false,
                });
            }
        }
        segments.sort_by(|a, b| a.id.cmp(&b.id));
        for w in segments.windows(2) {
            if w[0].id == w[1].id {
                return Err(NetworkError::DuplicateSegment(w[0].id.clone()));
            }
        }
        let seg_lookup = segments
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), SegIx(i as u32)))
            .collect();
        let mut out_segs = vec![Vec::new(); nodes.len()];
        for (i, s) in segments.iter().enumerate() {
            out_segs[s.from_node.idx()].push(SegIx(i as u32));
        }
        let rtree = index::build(&segments);
        Ok(Self {
            nodes,
            segments,
            roads,
            node_lookup,
            seg_lookup,
            out_segs,
            rtree,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix.idx()]
    }

    pub fn segment(&self, ix: SegIx) -> &Segment {
        &self.segments[ix.idx()]
    }

    pub fn seg_ix(&self, id: &str) -> Option<SegIx> {
        self.seg_lookup.get(id).copied()
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.node_lookup.get(id).copied()
    }

    pub fn require_seg(&self, id: &str) -> Result<SegIx, NetworkError> {
        self.seg_ix(id)
            .ok_or_else(|| NetworkError::UnknownSegment(id.to_string()))
    }

    pub fn require_node(&self, id: &str) -> Result<NodeIx, NetworkError> {
        self.node_ix(id)
            .ok_or_else(|| NetworkError::UnknownNode(id.to_string()))
    }

    /// Segments leaving `node`, in segment-id order.
    pub fn out_segments(&self, node: NodeIx) -> &[SegIx] {
        &self.out_segs[node.idx()]
    }

    pub fn path_length_m(&self, path: &[SegIx]) -> f64 {
        path.iter().map(|&s| self.segment(s).length_m).sum()
    }

    /// True when every consecutive pair shares a node in the direction of travel.
    pub fn is_contiguous(&self, path: &[SegIx]) -> bool {
        path.windows(2)
            .all(|w| self.segment(w[0]).to_node == self.segment(w[1]).from_node)
    }
}

fn validate_road(
    road: &Road,
    nodes: &[Node],
    lookup: &HashMap<String, NodeIx>,
) -> Result<(NodeIx, NodeIx), NetworkError> {
    let geometry_err = |reason: String| NetworkError::Geometry {
        id: road.id.clone(),
        reason,
    };
    let resolve = |node: &str| {
        lookup.get(node).copied().ok_or_else(|| NetworkError::MissingNode {
            segment: road.id.clone(),
            node: node.to_string(),
        })
    };
    let from = resolve(&road.from)?;
    let to = resolve(&road.to)?;
    if road.geometry.len() < 2 {
        return Err(geometry_err("fewer than 2 points".into()));
    }
    if let Some(p) = road.geometry.iter().find(|p| !p.is_valid()) {
        return Err(geometry_err(format!("coordinate out of range: {p:?}")));
    }
    if polyline_length_m(&road.geometry) <= 0.0 {
        return Err(geometry_err("zero length".into()));
    }
    let first = road.geometry[0];
    let last = *road.geometry.last().unwrap();
    if distance_m(first, nodes[from.idx()].pos) > ENDPOINT_TOLERANCE_M {
        return Err(geometry_err(format!("start does not coincide with node {}", road.from)));
    }
    if distance_m(last, nodes[to.idx()].pos) > ENDPOINT_TOLERANCE_M {
        return Err(geometry_err(format!("end does not coincide with node {}", road.to)));
    }
    Ok((from, to))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, lon: f64, lat: f64) -> Node {
        Node {
            id: id.into(),
            pos: LonLat::new(lon, lat),
        }
    }

    fn road(id: &str, from: (&str, f64, f64), to: (&str, f64, f64), oneway: bool) -> Road {
        Road {
            id: id.into(),
            from: from.0.into(),
            to: to.0.into(),
            geometry: vec![LonLat::new(from.1, from.2), LonLat::new(to.1, to.2)],
            name: String::new(),
            class: RoadClass::Other,
            oneway,
        }
    }

    #[test]
    fn minimal_network() {
        let net = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.001, 0.0)],
            vec![road("s", ("a", 0.0, 0.0), ("b", 0.001, 0.0), true)],
        )
        .unwrap();
        assert_eq!(net.nodes().len(), 2);
        assert_eq!(net.segments().len(), 1);
        assert!(net.segments()[0].length_m > 111.0);
    }

    #[test]
    fn bidirectional_road_expands() {
        let net = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.001, 0.0)],
            vec![road("s", ("a", 0.0, 0.0), ("b", 0.001, 0.0), false)],
        )
        .unwrap();
        assert_eq!(net.segments().len(), 2);
        let rev = net.segment(net.seg_ix("s:r").unwrap());
        assert_eq!(net.node(rev.from_node).id, "b");
        assert_eq!(rev.geometry[0], LonLat::new(0.001, 0.0));
    }

    #[test]
    fn missing_node_rejected() {
        let err = RoadNetwork::new(
            vec![node("a", 0.0, 0.0)],
            vec![road("s", ("a", 0.0, 0.0), ("Z", 0.001, 0.0), true)],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::MissingNode { ref node, .. } if node == "Z"));
    }

    #[test]
    fn zero_length_rejected() {
        let err = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.0, 0.0)],
            vec![road("s", ("a", 0.0, 0.0), ("b", 0.0, 0.0), true)],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Geometry { .. }));
    }

    #[test]
    fn endpoint_mismatch_rejected() {
        let err = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.001, 0.0)],
            vec![road("s", ("a", 0.0, 0.0), ("b", 0.0011, 0.0), true)],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::Geometry { .. }));
    }

    #[test]
    fn duplicate_segment_rejected() {
        let err = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.001, 0.0)],
            vec![
                road("s", ("a", 0.0, 0.0), ("b", 0.001, 0.0), true),
                road("s", ("b", 0.001, 0.0), ("a", 0.0, 0.0), true),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateSegment(_)));
    }

    #[test]
    fn reverse_suffix_collision_rejected() {
        let err = RoadNetwork::new(
            vec![node("a", 0.0, 0.0), node("b", 0.001, 0.0)],
            vec![
                road("s", ("a", 0.0, 0.0), ("b", 0.001, 0.0), false),
                road("s:r", ("b", 0.001, 0.0), ("a", 0.0, 0.0), true),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateSegment(_)));
    }
}
