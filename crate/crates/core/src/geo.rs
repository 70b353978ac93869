//! Planar approximations of WGS84 geometry.
//!
//! Distances use the equirectangular approximation: longitude differences are
//! scaled by the cosine of the latitude and both axes by the mean earth
//! radius. At corridor extents (< 100 km) the error against a geodesic is well
//! under 0.1%.

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// A WGS84 coordinate. Serialized as `[lon, lat]` to match GeoJSON ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

impl From<[f64; 2]> for LonLat {
    fn from(v: [f64; 2]) -> Self {
        Self { lon: v[0], lat: v[1] }
    }
}

impl From<LonLat> for [f64; 2] {
    fn from(p: LonLat) -> Self {
        [p.lon, p.lat]
    }
}

/// Equirectangular distance in meters, scaled at the mean latitude of the pair.
pub fn distance_m(a: LonLat, b: LonLat) -> f64 {
    let cos_lat = ((a.lat + b.lat) * 0.5 * DEG).cos();
    let dx = (b.lon - a.lon) * DEG * cos_lat;
    let dy = (b.lat - a.lat) * DEG;
    EARTH_RADIUS_M * dx.hypot(dy)
}

pub fn polyline_length_m(line: &[LonLat]) -> f64 {
    line.windows(2).map(|w| distance_m(w[0], w[1])).sum()
}

/// A tangent plane anchored at `origin`; x points east and y north, in meters.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    origin: LonLat,
    m_per_deg_lon: f64,
    m_per_deg_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: LonLat) -> Self {
        let m_per_deg_lat = EARTH_RADIUS_M * DEG;
        Self {
            origin,
            m_per_deg_lon: m_per_deg_lat * (origin.lat * DEG).cos(),
            m_per_deg_lat,
        }
    }

    pub fn origin(&self) -> LonLat {
        self.origin
    }

    pub fn project(&self, p: LonLat) -> [f64; 2] {
        [
            (p.lon - self.origin.lon) * self.m_per_deg_lon,
            (p.lat - self.origin.lat) * self.m_per_deg_lat,
        ]
    }

    pub fn unproject(&self, xy: [f64; 2]) -> LonLat {
        LonLat {
            lon: self.origin.lon + xy[0] / self.m_per_deg_lon,
            lat: self.origin.lat + xy[1] / self.m_per_deg_lat,
        }
    }

    /// Half-widths in degrees of a box that contains every point within
    /// `radius_m` of the origin under this frame's metric.
    pub fn degree_extent(&self, radius_m: f64) -> (f64, f64) {
        (radius_m / self.m_per_deg_lon, radius_m / self.m_per_deg_lat)
    }
}

/// Closest point on the planar segment `a`-`b` to the frame origin.
/// Returns `(distance, t)` with `t` in `[0, 1]` the parameter along the segment.
pub fn origin_to_segment(a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = a[0] + t * d[0];
    let y = a[1] + t * d[1];
    (x.hypot(y), t)
}

/// Projection of a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineProjection {
    pub distance_m: f64,
    /// Distance along the polyline to the closest point, in the same metric as
    /// [`polyline_length_m`].
    pub offset_m: f64,
    pub closest: LonLat,
}

/// Closest point on `line` to `p`, measured in the tangent plane at `p`.
/// The first piece wins among equally close pieces.
pub fn project_onto_polyline(p: LonLat, line: &[LonLat]) -> PolylineProjection {
    let frame = LocalFrame::new(p);
    let mut best = PolylineProjection {
        distance_m: f64::INFINITY,
        offset_m: 0.0,
        closest: line[0],
    };
    let mut along = 0.0;
    for w in line.windows(2) {
        let a = frame.project(w[0]);
        let b = frame.project(w[1]);
        let (d, t) = origin_to_segment(a, b);
        let piece = distance_m(w[0], w[1]);
        if d < best.distance_m {
            best = PolylineProjection {
                distance_m: d,
                offset_m: along + t * piece,
                closest: frame.unproject([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]),
            };
        }
        along += piece;
    }
    if line.len() == 1 {
        best.distance_m = distance_m(p, line[0]);
    }
    best
}

/// Point at `offset_m` along `line` (clamped to the ends), interpolated linearly
/// in lon/lat within the containing piece.
pub fn point_along(line: &[LonLat], offset_m: f64) -> LonLat {
    let mut remaining = offset_m.max(0.0);
    for w in line.windows(2) {
        let piece = distance_m(w[0], w[1]);
        if remaining <= piece && piece > 0.0 {
            let t = remaining / piece;
            return LonLat {
                lon: w[0].lon + t * (w[1].lon - w[0].lon),
                lat: w[0].lat + t * (w[1].lat - w[0].lat),
            };
        }
        remaining -= piece;
    }
    *line.last().expect("non-empty polyline")
}

/// Twice the signed area of triangle (o, a, b); positive when `b` lies left of `o -> a`.
pub fn orient(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}
