use rstar::{RTree, RTreeObject, AABB};

use super::{RoadNetwork, SegIx, Segment};
use crate::geo::{project_onto_polyline, LocalFrame, LonLat};

/// Segment bounding box in lon/lat degrees.
#[derive(Debug)]
pub(super) struct IndexedSegment {
    seg: SegIx,
    envelope: AABB<[f64; 2]>,
}

impl RTreeObject for IndexedSegment {
    type Envelope = AABB<[f64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        self.envelope
    }
}

pub(super) fn build(segments: &[Segment]) -> RTree<IndexedSegment> {
    let items = segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts: Vec<[f64; 2]> = s.geometry.iter().map(|p| [p.lon, p.lat]).collect();
            IndexedSegment {
                seg: SegIx(i as u32),
                envelope: AABB::from_points(pts.iter()),
            }
        })
        .collect();
    RTree::bulk_load(items)
}

/// A point projected onto one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProjection {
    pub seg: SegIx,
    pub distance_m: f64,
    /// Meters from the segment start to the closest point.
    pub offset_m: f64,
    pub closest: LonLat,
}

/// Ordering key for distances: micrometer resolution, so values equal up to
/// float noise tie and fall back to segment id order.
fn distance_key(d: f64) -> i64 {
    (d * 1e6).round() as i64
}

pub(crate) fn sort_projections(v: &mut [SegmentProjection]) {
    v.sort_by_key(|c| (distance_key(c.distance_m), c.seg));
}

impl RoadNetwork {
    /// Projects `p` onto `seg`.
    pub fn project(&self, p: LonLat, seg: SegIx) -> SegmentProjection {
        let pr = project_onto_polyline(p, &self.segment(seg).geometry);
        SegmentProjection {
            seg,
            distance_m: pr.distance_m,
            offset_m: pr.offset_m.min(self.segment(seg).length_m),
            closest: pr.closest,
        }
    }

    /// Segments within `radius_m` of `p`, closest first (ties by segment id),
    /// at most `k` of them.
    pub fn project_nearby(&self, p: LonLat, radius_m: f64, k: usize) -> Vec<SegmentProjection> {
        if !(radius_m > 0.0) || k == 0 {
            return Vec::new();
        }
        let frame = LocalFrame::new(p);
        let (dlon, dlat) = frame.degree_extent(radius_m);
        let (dlon, dlat) = (dlon * (1.0 + 1e-9) + 1e-12, dlat * (1.0 + 1e-9) + 1e-12);
        let query = AABB::from_corners([p.lon - dlon, p.lat - dlat], [p.lon + dlon, p.lat + dlat]);
        let mut hits: Vec<SegmentProjection> = self
            .rtree
            .locate_in_envelope_intersecting(query)
            .map(|item| self.project(p, item.seg))
            .filter(|c| c.distance_m <= radius_m)
            .collect();
        sort_projections(&mut hits);
        hits.truncate(k);
        hits
    }

    /// `(segment id, distance)` pairs within `radius_m` of `p`, closest first.
    pub fn nearest_segments(&self, p: LonLat, radius_m: f64, k: usize) -> Vec<(String, f64)> {
        self.project_nearby(p, radius_m, k)
            .into_iter()
            .map(|c| (self.segment(c.seg).id.clone(), c.distance_m))
            .collect()
    }

    /// Segments whose bounding boxes intersect the lon/lat box.
    pub fn segments_in_bbox(&self, min: LonLat, max: LonLat) -> Vec<SegIx> {
        let query = AABB::from_corners([min.lon, min.lat], [max.lon, max.lat]);
        let mut out: Vec<SegIx> = self
            .rtree
            .locate_in_envelope_intersecting(query)
            .map(|item| item.seg)
            .collect();
        out.sort();
        out
    }
}
