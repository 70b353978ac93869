use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{RouteError, RouteSignature};
use crate::network::RoadNetwork;

pub const DEFAULT_THETA: f64 = 0.9;

/// Trips whose signatures fold onto one canonical path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSet {
    pub route_id: String,
    pub label: String,
    /// The founding member's signature.
    pub canonical: RouteSignature,
    pub members: Vec<String>,
    /// Similarity of each member to the canonical path, aligned with `members`.
    pub fold_scores: Vec<f64>,
}

/// Unique segments of a signature sorted by key, with their lengths.
fn weighted_set<K: Ord + Copy>(keys: impl Iterator<Item = K>, lengths: &[f64]) -> Vec<(K, f64)> {
    let mut v: BTreeMap<K, f64> = BTreeMap::new();
    for (k, &len) in keys.zip(lengths) {
        v.entry(k).or_insert(len);
    }
    v.into_iter().collect()
}

/// Length-weighted Jaccard of two key-sorted sets. Shared and union lengths
/// are summed in key order so the result is symmetric and exactly 1 for
/// identical sets.
fn jaccard<K: Ord + Copy>(a: &[(K, f64)], b: &[(K, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut shared, mut union) = (0.0, 0.0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match ord {
            std::cmp::Ordering::Less => {
                union += a[i].1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                union += b[j].1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                shared += a[i].1;
                union += a[i].1;
                i += 1;
                j += 1;
            }
        }
    }
    if union > 0.0 {
        shared / union
    } else {
        1.0
    }
}

/// Sum of the lengths of shared segment ids over the sum of the lengths of
/// all segment ids present in either signature.
pub fn similarity(a: &RouteSignature, b: &RouteSignature) -> f64 {
    let sa = weighted_set(a.segs.iter().map(String::as_str), &a.seg_lengths_m);
    let sb = weighted_set(b.segs.iter().map(String::as_str), &b.seg_lengths_m);
    jaccard(&sa, &sb)
}

/// Greedy longest-first folding. Signatures are visited by descending
/// `length_m` (ties by `trip_id`); each joins the first route set whose
/// canonical path is at least `theta` similar, or founds a new one.
/// Labels are left empty; see [`label_routes`].
pub fn fold_routes(sigs: &[RouteSignature], theta: f64) -> Result<Vec<RouteSet>, RouteError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(RouteError::InvalidTheta(theta));
    }
    let mut order: Vec<usize> = (0..sigs.len()).collect();
    order.sort_by(|&i, &j| {
        sigs[j]
            .length_m
            .total_cmp(&sigs[i].length_m)
            .then_with(|| sigs[i].trip_id.cmp(&sigs[j].trip_id))
    });

    // intern segment ids by lexicographic rank so merges sum in the same
    // order as `similarity`
    let mut ids: Vec<&str> = sigs.iter().flat_map(|s| s.segs.iter().map(String::as_str)).collect();
    ids.sort_unstable();
    ids.dedup();
    let rank: HashMap<&str, u32> = ids.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
    let sets: Vec<Vec<(u32, f64)>> = sigs
        .iter()
        .map(|s| weighted_set(s.segs.iter().map(|id| rank[id.as_str()]), &s.seg_lengths_m))
        .collect();
    let set_len: Vec<f64> = sets.iter().map(|s| s.iter().map(|x| x.1).sum()).collect();

    let mut founders: Vec<usize> = Vec::new();
    let mut out: Vec<RouteSet> = Vec::new();
    for &i in &order {
        let joined = founders.iter().enumerate().find_map(|(k, &f)| {
            // shared <= min and union >= max bound the similarity
            let (lo, hi) = (set_len[i].min(set_len[f]), set_len[i].max(set_len[f]));
            if hi > 0.0 && lo < theta * hi * (1.0 - 1e-12) {
                return None;
            }
            let s = jaccard(&sets[i], &sets[f]);
            (s >= theta).then_some((k, s))
        });
        match joined {
            Some((k, s)) => {
                out[k].members.push(sigs[i].trip_id.clone());
                out[k].fold_scores.push(s);
            }
            None => {
                founders.push(i);
                out.push(RouteSet {
                    route_id: format!("R{}", out.len() + 1),
                    label: String::new(),
                    canonical: sigs[i].clone(),
                    members: vec![sigs[i].trip_id.clone()],
                    fold_scores: vec![1.0],
                });
            }
        }
    }
    Ok(out)
}

/// Road name with the largest total length along the canonical path; ties go
/// to the lexicographically smaller name. Unnamed segments do not vote unless
/// nothing is named.
pub fn label_route(rs: &RouteSet, net: &RoadNetwork) -> String {
    let mut by_name: BTreeMap<&str, f64> = BTreeMap::new();
    for (id, &len) in rs.canonical.segs.iter().zip(&rs.canonical.seg_lengths_m) {
        let name = net.seg_ix(id).map(|ix| net.segment(ix).name.as_str()).unwrap_or("");
        if !name.is_empty() {
            *by_name.entry(name).or_insert(0.0) += len;
        }
    }
    let mut best: Option<(&str, f64)> = None;
    for (name, len) in by_name {
        if best.is_none_or(|(_, b)| len > b) {
            best = Some((name, len));
        }
    }
    best.map(|(n, _)| n.to_string()).unwrap_or_else(|| "unnamed".to_string())
}

/// Labels every set. When several sets get the same label, all but the
/// largest (earliest on ties) gain a ` (route_id)` suffix so labels stay
/// unique keys for share tables.
pub fn label_routes(sets: &mut [RouteSet], net: &RoadNetwork) {
    let labels: Vec<String> = sets.iter().map(|s| label_route(s, net)).collect();
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        owner
            .entry(l.as_str())
            .and_modify(|o| {
                if sets[i].members.len() > sets[*o].members.len() {
                    *o = i;
                }
            })
            .or_insert(i);
    }
    let names: Vec<String> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if owner[l.as_str()] == i {
                l.clone()
            } else {
                format!("{l} ({})", sets[i].route_id)
            }
        })
        .collect();
    for (s, l) in sets.iter_mut().zip(names) {
        s.label = l;
    }
}
