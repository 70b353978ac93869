use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geo::{distance_m, LocalFrame, LonLat};
use crate::ingest::Waypoint;
use crate::network::{RoadNetwork, SegIx};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn sub_rng(parts: &[u64]) -> ChaCha8Rng {
    let seed = parts.iter().fold(0x5EED_u64, |acc, &p| mix(acc ^ mix(p)));
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit FNV-1a of a string.
pub(crate) fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// A directed path's geometry with cumulative piece lengths.
pub struct PathLine {
    pts: Vec<LonLat>,
    cum: Vec<f64>,
    /// Offset at which each path segment starts, plus the total length.
    seg_starts: Vec<f64>,
}

impl PathLine {
    pub fn new(net: &RoadNetwork, path: &[SegIx]) -> Self {
        let mut pts: Vec<LonLat> = Vec::new();
        let mut cum: Vec<f64> = Vec::new();
        let mut seg_starts = Vec::with_capacity(path.len() + 1);
        for &s in path {
            let geom = &net.segment(s).geometry;
            let skip = usize::from(!pts.is_empty());
            seg_starts.push(cum.last().copied().unwrap_or(0.0));
            for &p in &geom[skip..] {
                let c = match pts.last() {
                    Some(&q) => cum.last().unwrap() + distance_m(q, p),
                    None => 0.0,
                };
                pts.push(p);
                cum.push(c);
            }
        }
        seg_starts.push(cum.last().copied().unwrap_or(0.0));
        Self { pts, cum, seg_starts }
    }

    pub fn length_m(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    /// Start offset of the `i`-th path segment; `i == len` gives the total.
    pub fn segment_start(&self, i: usize) -> f64 {
        self.seg_starts[i]
    }

    pub fn at(&self, offset: f64) -> LonLat {
        let off = offset.clamp(0.0, self.length_m());
        let i = self.cum.partition_point(|&c| c <= off).clamp(1, self.pts.len() - 1);
        let (a, b) = (self.pts[i - 1], self.pts[i]);
        let span = self.cum[i] - self.cum[i - 1];
        let t = if span > 0.0 { (off - self.cum[i - 1]) / span } else { 0.0 };
        LonLat::new(a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat))
    }

    /// Offset of the first point where the path meets the straight line
    /// `a`-`b`.
    pub fn crossing_offset(&self, a: LonLat, b: LonLat) -> Option<f64> {
        let frame = LocalFrame::new(a);
        let q = frame.project(b);
        for i in 1..self.pts.len() {
            let p0 = frame.project(self.pts[i - 1]);
            let p1 = frame.project(self.pts[i]);
            let d = [p1[0] - p0[0], p1[1] - p0[1]];
            let den = d[0] * q[1] - d[1] * q[0];
            if den == 0.0 {
                continue;
            }
            // p0 + s d = u q
            let s = (q[0] * p0[1] - q[1] * p0[0]) / den;
            let u = (d[0] * p0[1] - d[1] * p0[0]) / den;
            if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u) {
                return Some(self.cum[i - 1] + s * (self.cum[i] - self.cum[i - 1]));
            }
        }
        None
    }
}

pub(crate) fn seconds(s: f64) -> Duration {
    Duration::microseconds((s * 1e6).round() as i64)
}

/// Round to whole milliseconds.
pub(crate) fn round_ms(t: DateTime<Utc>) -> DateTime<Utc> {
    let ms = (t.timestamp_micros() as f64 / 1000.0).round() as i64;
    DateTime::from_timestamp_millis(ms).expect("timestamp in range")
}

/// Waypoints every `period_s` from `departure` along `line` at constant
/// `speed_mps`, plus the arrival point, with isotropic Gaussian noise of
/// `sigma_m` in the local tangent plane. Timestamps are whole milliseconds.
pub fn sample_waypoints(
    line: &PathLine,
    departure: DateTime<Utc>,
    speed_mps: f64,
    period_s: f64,
    sigma_m: f64,
    rng: &mut impl Rng,
) -> Vec<Waypoint> {
    let total = line.length_m();
    let travel_s = total / speed_mps;
    let noise = Normal::new(0.0, sigma_m.max(0.0)).expect("valid sigma");
    let jitter = |p: LonLat, rng: &mut dyn rand::RngCore| {
        if sigma_m > 0.0 {
            let (dx, dy) = (noise.sample(rng), noise.sample(rng));
            LocalFrame::new(p).unproject([dx, dy])
        } else {
            p
        }
    };
    let departure = round_ms(departure);
    let arrival = round_ms(departure + seconds(travel_s));
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = round_ms(departure + seconds(k as f64 * period_s));
        if t >= arrival {
            break;
        }
        let elapsed = (t - departure).num_microseconds().unwrap() as f64 / 1e6;
        out.push(Waypoint {
            t,
            pos: jitter(line.at(elapsed * speed_mps), rng),
        });
        k += 1;
    }
    out.push(Waypoint {
        t: arrival,
        pos: jitter(line.at(total), rng),
    });
    out
}
