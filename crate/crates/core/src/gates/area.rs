use serde::{Deserialize, Serialize};

use super::GateError;
use crate::geo::{orient, LocalFrame, LonLat};

/// A simple closed ring. Points on the boundary count as inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LonLat>", into = "Vec<LonLat>")]
pub struct StudyArea {
    ring: Vec<LonLat>,
    #[serde(skip)]
    projected: Vec<[f64; 2]>,
    #[serde(skip)]
    frame_origin: LonLat,
    #[serde(skip)]
    bounds: ([f64; 2], [f64; 2]),
}

impl TryFrom<Vec<LonLat>> for StudyArea {
    type Error = GateError;

    fn try_from(ring: Vec<LonLat>) -> Result<Self, Self::Error> {
        Self::new(ring)
    }
}

impl From<StudyArea> for Vec<LonLat> {
    fn from(a: StudyArea) -> Self {
        a.ring
    }
}

impl StudyArea {
    pub fn new(ring: Vec<LonLat>) -> Result<Self, GateError> {
        let bad = |m: &str| GateError::InvalidStudyArea(m.to_string());
        if ring.len() < 4 {
            return Err(bad("ring needs at least 4 points (closed triangle)"));
        }
        if ring.first() != ring.last() {
            return Err(bad("ring is not closed"));
        }
        if !ring.iter().all(LonLat::is_valid) {
            return Err(bad("coordinate out of range"));
        }
        let frame = LocalFrame::new(ring[0]);
        let projected: Vec<[f64; 2]> = ring.iter().map(|&p| frame.project(p)).collect();
        let area2: f64 = projected
            .windows(2)
            .map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1])
            .sum();
        if !(area2.abs() > 0.0) {
            return Err(bad("ring has zero area"));
        }
        if self_intersects(&projected) {
            return Err(bad("ring self-intersects"));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &projected {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Ok(Self {
            frame_origin: ring[0],
            ring,
            projected,
            bounds: (lo, hi),
        })
    }

    pub fn ring(&self) -> &[LonLat] {
        &self.ring
    }

    pub fn contains(&self, p: LonLat) -> bool {
        let q = LocalFrame::new(self.frame_origin).project(p);
        let (lo, hi) = self.bounds;
        if q[0] < lo[0] || q[0] > hi[0] || q[1] < lo[1] || q[1] > hi[1] {
            return false;
        }
        let mut inside = false;
        for w in self.projected.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(a, b, q) {
                return true;
            }
            if (a[1] > q[1]) != (b[1] > q[1]) {
                let x = a[0] + (q[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if q[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn on_segment(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> bool {
    orient(a, b, q) == 0.0
        && q[0] >= a[0].min(b[0])
        && q[0] <= a[0].max(b[0])
        && q[1] >= a[1].min(b[1])
        && q[1] <= a[1].max(b[1])
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// Any two non-adjacent edges of a closed ring touching or crossing.
fn self_intersects(p: &[[f64; 2]]) -> bool {
    let m = p.len() - 1;
    for i in 0..m {
        for j in i + 1..m {
            let adjacent = j == i + 1 || (i == 0 && j == m - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                let (a, b, c, d) = (p[i], p[i + 1], p[j], p[j + 1]);
                let collinear_overlap = orient(a, b, d) == 0.0 && orient(a, b, c) == 0.0 && {
                    let shared = if j == i + 1 { b } else { a };
                    let other_j = if j == i + 1 { d } else { c };
                    let other_i = if j == i + 1 { a } else { b };
                    (other_j[0] - shared[0]) * (other_i[0] - shared[0])
                        + (other_j[1] - shared[1]) * (other_i[1] - shared[1])
                        > 0.0
                };
                if collinear_overlap {
                    return true;
                }
                continue;
            }
            if segments_intersect(p[i], p[i + 1], p[j], p[j + 1]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(pts: &[(f64, f64)]) -> Vec<LonLat> {
        let f = LocalFrame::new(LonLat::new(-77.0, 39.0));
        pts.iter().map(|&(x, y)| f.unproject([x, y])).collect()
    }

    #[test]
    fn square_contains() {
        let a = StudyArea::new(ring(&[(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0), (0.0, 0.0)])).unwrap();
        let f = LocalFrame::new(LonLat::new(-77.0, 39.0));
        assert!(a.contains(f.unproject([50.0, 50.0])));
        assert!(!a.contains(f.unproject([150.0, 50.0])));
        // vertex and edge points are inside
        assert!(a.contains(a.ring()[2]));
        assert!(a.contains(LonLat::new(-77.0, a.ring()[3].lat * 0.5 + 39.0 * 0.5)));
    }

    #[test]
    fn invalid_rings() {
        let open = ring(&[(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)]);
        assert!(StudyArea::new(open).is_err());
        let bowtie = ring(&[(0.0, 0.0), (100.0, 100.0), (100.0, 0.0), (0.0, 50.0), (0.0, 0.0)]);
        assert!(matches!(StudyArea::new(bowtie), Err(GateError::InvalidStudyArea(m)) if m.contains("self")));
        let flat = ring(&[(0.0, 0.0), (100.0, 0.0), (50.0, 0.0), (0.0, 0.0)]);
        assert!(StudyArea::new(flat).is_err());
    }

    #[test]
    fn serde_validates() {
        let bowtie = ring(&[(0.0, 0.0), (100.0, 100.0), (100.0, 0.0), (0.0, 50.0), (0.0, 0.0)]);
        let text = serde_json::to_string(&bowtie).unwrap();
        assert!(serde_json::from_str::<StudyArea>(&text).is_err());
    }
}
