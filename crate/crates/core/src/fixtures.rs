//! Programmatic road networks used by the generator, tests and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{LocalFrame, LonLat};
use crate::network::{NetworkError, Node, Road, RoadClass, RoadNetwork};

/// Origin of every fixture: a point in central Maryland.
pub const FIXTURE_ORIGIN: LonLat = LonLat::new(-77.20, 39.20);

/// Builds a network from coordinates in meters east/north of an origin.
#[derive(Debug)]
pub struct NetworkBuilder {
    frame: LocalFrame,
    nodes: Vec<Node>,
    roads: Vec<Road>,
}

impl NetworkBuilder {
    pub fn new(origin: LonLat) -> Self {
        Self {
            frame: LocalFrame::new(origin),
            nodes: Vec::new(),
            roads: Vec::new(),
        }
    }

    pub fn frame(&self) -> LocalFrame {
        self.frame
    }

    pub fn node(&mut self, id: &str, x: f64, y: f64) -> &mut Self {
        self.nodes.push(Node {
            id: id.to_string(),
            pos: self.frame.unproject([x, y]),
        });
        self
    }

    fn node_pos(&self, id: &str) -> LonLat {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .unwrap_or_else(|| panic!("fixture node {id} not declared"))
            .pos
    }

    /// Adds a road from `from` to `to`, bending through `via` (meters).
    pub fn road(
        &mut self,
        id: &str,
        from: &str,
        to: &str,
        via: &[[f64; 2]],
        name: &str,
        class: RoadClass,
        oneway: bool,
    ) -> &mut Self {
        let mut geometry = vec![self.node_pos(from)];
        geometry.extend(via.iter().map(|&xy| self.frame.unproject(xy)));
        geometry.push(self.node_pos(to));
        self.roads.push(Road {
            id: id.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            geometry,
            name: name.to_string(),
            class,
            oneway,
        });
        self
    }

    pub fn build(self) -> Result<RoadNetwork, NetworkError> {
        RoadNetwork::new(self.nodes, self.roads)
    }
}

pub fn grid_node_id(i: usize, j: usize) -> String {
    format!("n{i:02}_{j:02}")
}

/// `nx` x `ny` grid of bidirectional 4-connected roads. Rows are named
/// "Row {j} Street" and columns "Col {i} Avenue". With `jitter_m > 0` node
/// positions are perturbed uniformly (seeded), which makes shortest paths
/// unique almost surely.
pub fn grid(nx: usize, ny: usize, spacing_m: f64, jitter_m: f64, seed: u64) -> RoadNetwork {
    let mut b = NetworkBuilder::new(FIXTURE_ORIGIN);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 0..ny {
        for i in 0..nx {
            let (mut x, mut y) = (i as f64 * spacing_m, j as f64 * spacing_m);
            if jitter_m > 0.0 {
                x += rng.random_range(-jitter_m..jitter_m);
                y += rng.random_range(-jitter_m..jitter_m);
            }
            b.node(&grid_node_id(i, j), x, y);
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                b.road(
                    &format!("h{j:02}_{i:02}"),
                    &grid_node_id(i, j),
                    &grid_node_id(i + 1, j),
                    &[],
                    &format!("Row {j} Street"),
                    RoadClass::Secondary,
                    false,
                );
            }
            if j + 1 < ny {
                b.road(
                    &format!("v{i:02}_{j:02}"),
                    &grid_node_id(i, j),
                    &grid_node_id(i, j + 1),
                    &[],
                    &format!("Col {i} Avenue"),
                    RoadClass::Secondary,
                    false,
                );
            }
        }
    }
    b.build().expect("grid fixture is valid")
}

/// A single straight bidirectional road of three 1 km segments running east.
pub fn corridor() -> RoadNetwork {
    let mut b = NetworkBuilder::new(FIXTURE_ORIGIN);
    for (k, x) in [0.0, 1000.0, 2000.0, 3000.0].iter().enumerate() {
        b.node(&format!("c{k}"), *x, 0.0);
    }
    for k in 0..3 {
        b.road(
            &format!("c{k}{}", k + 1),
            &format!("c{k}"),
            &format!("c{}", k + 1),
            &[],
            "Corridor Highway",
            RoadClass::Motorway,
            false,
        );
    }
    b.build().expect("corridor fixture is valid")
}

/// Named network fixtures: `grid5x5`, `grid8x8j`, `grid36x36`, `corridor`,
/// `case-study-1`, `case-study-2`.
pub fn named(name: &str) -> Option<RoadNetwork> {
    Some(match name {
        "grid5x5" => grid(5, 5, 500.0, 0.0, 0),
        "grid8x8j" => grid(8, 8, 500.0, 40.0, 8),
        "grid36x36" => grid(36, 36, 400.0, 0.0, 0),
        "corridor" => corridor(),
        "case-study-1" => crate::synth::case_studies::enforcement_network(),
        "case-study-2" => crate::synth::case_studies::ramp_control_network(),
        _ => return None,
    })
}

/// A fixture by name, otherwise a network file at that path.
pub fn load(name_or_path: &str) -> Result<RoadNetwork, NetworkError> {
    match named(name_or_path) {
        Some(net) => Ok(net),
        None => RoadNetwork::load(name_or_path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        // 5x5 grid: 4*5 horizontal + 5*4 vertical undirected edges, each both ways
        let undirected = 4 * 5 + 5 * 4;
        let net = grid(5, 5, 500.0, 0.0, 0);
        assert_eq!(net.nodes().len(), 25);
        assert_eq!(net.segments().len(), 2 * undirected);
        assert_eq!(grid(36, 36, 400.0, 0.0, 0).segments().len(), 2 * 2 * 36 * 35);
    }
}
