use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::{NetworkError, NodeIx, RoadNetwork, SegIx};

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeIx,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Settled nodes of a one-to-many Dijkstra search.
#[derive(Debug, Default)]
pub struct SearchTree {
    settled: HashMap<NodeIx, (f64, Option<SegIx>)>,
}

impl SearchTree {
    pub fn distance(&self, node: NodeIx) -> Option<f64> {
        self.settled.get(&node).map(|&(d, _)| d)
    }

    /// Segments from the search root to `node`.
    pub fn path_to(&self, net: &RoadNetwork, node: NodeIx) -> Option<Vec<SegIx>> {
        let mut out = Vec::new();
        let mut cur = node;
        loop {
            let &(_, pred) = self.settled.get(&cur)?;
            match pred {
                None => break,
                Some(seg) => {
                    out.push(seg);
                    cur = net.segment(seg).from_node;
                }
            }
        }
        out.reverse();
        Some(out)
    }
}

impl RoadNetwork {
    /// Dijkstra from `src`, settling every node within `bound_m`. Stops early
    /// once `stop_at` is settled. Segments for which `blocked` returns true are
    /// never traversed. Ties settle in node id order; a predecessor is only
    /// replaced on strict improvement.
    pub fn search(
        &self,
        src: NodeIx,
        bound_m: f64,
        stop_at: Option<NodeIx>,
        blocked: &dyn Fn(SegIx) -> bool,
    ) -> SearchTree {
        let mut best: HashMap<NodeIx, (f64, Option<SegIx>)> = HashMap::new();
        let mut settled = HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(src, (0.0, None));
        heap.push(HeapEntry { dist: 0.0, node: src });
        while let Some(HeapEntry { dist, node }) = heap.pop() {
            if dist > bound_m || settled.contains_key(&node) {
                if dist > bound_m {
                    break;
                }
                continue;
            }
            let entry = best[&node];
            if dist > entry.0 {
                continue;
            }
            settled.insert(node, entry);
            if stop_at == Some(node) {
                break;
            }
            for &seg in self.out_segments(node) {
                if blocked(seg) {
                    continue;
                }
                let s = self.segment(seg);
                let nd = dist + s.length_m;
                if nd > bound_m || settled.contains_key(&s.to_node) {
                    continue;
                }
                let improve = match best.get(&s.to_node) {
                    Some(&(d, _)) => nd < d,
                    None => true,
                };
                if improve {
                    best.insert(s.to_node, (nd, Some(seg)));
                    heap.push(HeapEntry {
                        dist: nd,
                        node: s.to_node,
                    });
                }
            }
        }
        SearchTree { settled }
    }

    /// Shortest node-to-node route avoiding `blocked` segments.
    pub fn node_route(
        &self,
        src: NodeIx,
        dst: NodeIx,
        blocked: &dyn Fn(SegIx) -> bool,
    ) -> Option<(f64, Vec<SegIx>)> {
        let tree = self.search(src, f64::INFINITY, Some(dst), blocked);
        let d = tree.distance(dst)?;
        Some((d, tree.path_to(self, dst)?))
    }

    /// Minimum-length directed path that starts with `from` and ends with `to`.
    pub fn shortest_path(&self, from: SegIx, to: SegIx) -> Option<Vec<SegIx>> {
        if from == to {
            return Some(vec![from]);
        }
        let start = self.segment(from).to_node;
        let end = self.segment(to).from_node;
        let (_, mid) = self.node_route(start, end, &|_| false)?;
        let mut path = Vec::with_capacity(mid.len() + 2);
        path.push(from);
        path.extend(mid);
        path.push(to);
        Some(path)
    }

    /// [`shortest_path`](Self::shortest_path) on segment ids.
    pub fn shortest_path_ids(&self, from: &str, to: &str) -> Result<Option<Vec<String>>, NetworkError> {
        let a = self.require_seg(from)?;
        let b = self.require_seg(to)?;
        Ok(self
            .shortest_path(a, b)
            .map(|p| p.into_iter().map(|s| self.segment(s).id.clone()).collect()))
    }
}
