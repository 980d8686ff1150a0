//! Sub-group formation: k-means over global image descriptors, silhouette
//! based choice of K, and key-image selection.
//!
//! All entry points first order their input by `image_id`, so results depend
//! only on the set of images and the seed, never on input order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CosegError, Result};
use crate::raster::RasterPlane;

pub const MAX_LLOYD_ITERATIONS: usize = 100;
pub const RESTARTS_PER_K: u64 = 5;
/// Side length of the thumbnail behind the fallback descriptor.
pub const FALLBACK_GRID: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub image_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(image_id: impl Into<String>, values: Vec<f64>) -> Self {
        FeatureVector {
            image_id: image_id.into(),
            values,
        }
    }
}

/// Assignment of images to clusters.
///
/// Cluster indices are zero-based internally; on-disk manifests number them
/// from 1. `image_ids` is sorted and `assignment[i]` labels `image_ids[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubGrouping {
    pub k: usize,
    pub image_ids: Vec<String>,
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Empty until [`pick_key_images`] has run.
    pub key_images: Vec<String>,
}

impl SubGrouping {
    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.image_ids
            .iter()
            .zip(&self.assignment)
            .filter(|(_, &c)| c == cluster)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn cluster_of(&self, image_id: &str) -> Option<usize> {
        self.image_ids
            .iter()
            .position(|id| id == image_id)
            .map(|i| self.assignment[i])
    }

    pub fn key_of(&self, image_id: &str) -> Option<&str> {
        self.cluster_of(image_id)
            .and_then(|c| self.key_images.get(c))
            .map(String::as_str)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Deterministic stand-in descriptor: the image shrunk to an 8x8 thumbnail,
/// red plane then green then blue (192 values).
pub fn fallback_features(image_id: &str, image: &RasterPlane) -> Result<FeatureVector> {
    if image.channels() != 3 {
        return Err(CosegError::Argument(
            "fallback features need a 3-channel image".into(),
        ));
    }
    let thumb = image.resample_bilinear(FALLBACK_GRID, FALLBACK_GRID)?;
    let mut values = Vec::with_capacity(3 * FALLBACK_GRID * FALLBACK_GRID);
    for c in 0..3 {
        values.extend(thumb.channel(c).data().iter().copied());
    }
    Ok(FeatureVector::new(image_id, values))
}

/// Parses `<image_filename> <v1> ... <vD>` lines.
pub fn parse_feature_file(text: &str, origin: &Path) -> Result<Vec<FeatureVector>> {
    let mut out: Vec<FeatureVector> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().unwrap().to_string();
        let values = fields
            .map(|f| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CosegError::format(origin, format!("line {}: bad value {f:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(CosegError::format(
                origin,
                format!("line {}: no feature values", lineno + 1),
            ));
        }
        if let Some(first) = out.first() {
            if first.values.len() != values.len() {
                return Err(CosegError::format(
                    origin,
                    format!(
                        "line {}: dimension {} differs from {}",
                        lineno + 1,
                        values.len(),
                        first.values.len()
                    ),
                ));
            }
        }
        out.push(FeatureVector::new(id, values));
    }
    Ok(out)
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CosegError::io(path, e))?;
    parse_feature_file(&text, path)
}

fn canonical(features: &[FeatureVector]) -> Result<Vec<&FeatureVector>> {
    let mut sorted: Vec<&FeatureVector> = features.iter().collect();
    sorted.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    if let Some(first) = sorted.first() {
        let d = first.values.len();
        for f in &sorted {
            if f.values.len() != d {
                return Err(CosegError::Argument(
                    "feature vectors must share one dimension".into(),
                ));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(CosegError::Argument(format!(
                    "non-finite feature for {}",
                    f.image_id
                )));
            }
        }
    }
    for pair in sorted.windows(2) {
        if pair[0].image_id == pair[1].image_id {
            return Err(CosegError::Argument(format!(
                "duplicate image id {}",
                pair[0].image_id
            )));
        }
    }
    Ok(sorted)
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn kmeans_pp_init(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.gen_range(0..n)].to_vec()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // rounding can run past the end; fall back to the last positive weight
            if nearest[chosen] == 0.0 {
                chosen = nearest.iter().rposition(|&d| d > 0.0).unwrap();
            }
            chosen
        } else {
            // every point coincides with a center; duplicates are all that is left
            rng.gen_range(0..n)
        };
        let c = points[pick].to_vec();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[&[f64]], centroids: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn means(points: &[&[f64]], assignment: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    (sums, counts)
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster.
fn repair_empty(points: &[&[f64]], assignment: &mut [usize], centroids: &mut [Vec<f64>], counts: &mut [usize]) {
    let k = centroids.len();
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        counts[assignment[i]] -= 1;
        assignment[i] = empty;
        counts[empty] = 1;
    }
    let dim = points[0].len();
    let (m, c) = means(points, assignment, k, dim);
    centroids.clone_from_slice(&m);
    counts.clone_from_slice(&c);
}

fn sse(points: &[&[f64]], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

/// A finished Lloyd run along with its objective trace.
#[derive(Clone, Debug)]
pub struct KMeansRun {
    pub grouping: SubGrouping,
    pub sse: f64,
    /// Within-cluster SSE after each assign/update iteration.
    pub sse_trace: Vec<f64>,
}

/// Lloyd's algorithm with k-means++ seeding; returns the objective trace.
pub fn kmeans_traced(features: &[FeatureVector], k: usize, seed: u64) -> Result<KMeansRun> {
    if k == 0 {
        return Err(CosegError::Argument("k must be at least 1".into()));
    }
    if features.len() < k {
        return Err(CosegError::Argument(format!(
            "k={k} exceeds the {} available feature vectors",
            features.len()
        )));
    }
    let sorted = canonical(features)?;
    let points: Vec<&[f64]> = sorted.iter().map(|f| f.values.as_slice()).collect();
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids = kmeans_pp_init(&points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let next = assign(&points, &centroids);
        if next == assignment {
            break;
        }
        assignment = next;
        let (m, mut counts) = means(&points, &assignment, k, dim);
        centroids = m;
        if counts.contains(&0) {
            repair_empty(&points, &mut assignment, &mut centroids, &mut counts);
        }
        trace.push(sse(&points, &assignment, &centroids));
    }
    let total = sse(&points, &assignment, &centroids);
    Ok(KMeansRun {
        grouping: SubGrouping {
            k,
            image_ids: sorted.iter().map(|f| f.image_id.clone()).collect(),
            assignment,
            centroids,
            key_images: Vec::new(),
        },
        sse: total,
        sse_trace: trace,
    })
}

/// Clusters `features` into `k` groups. Key images are not yet chosen.
pub fn kmeans(features: &[FeatureVector], k: usize, seed: u64) -> Result<SubGrouping> {
    Ok(kmeans_traced(features, k, seed)?.grouping)
}

fn ordered_points<'a>(features: &'a [FeatureVector], grouping: &SubGrouping) -> Result<Vec<&'a [f64]>> {
    let by_id: HashMap<&str, &FeatureVector> =
        features.iter().map(|f| (f.image_id.as_str(), f)).collect();
    grouping
        .image_ids
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|f| f.values.as_slice())
                .ok_or_else(|| CosegError::Argument(format!("no feature vector for {id}")))
        })
        .collect()
}

/// Mean silhouette width with Euclidean distance; singletons score 0.
pub fn silhouette_score(features: &[FeatureVector], grouping: &SubGrouping) -> Result<f64> {
    if grouping.k < 2 {
        return Err(CosegError::Argument("silhouette needs at least two clusters".into()));
    }
    let points = ordered_points(features, grouping)?;
    let k = grouping.k;
    let mut sizes = vec![0usize; k];
    for &c in &grouping.assignment {
        sizes[c] += 1;
    }
    if sizes.contains(&0) {
        return Err(CosegError::Argument("silhouette needs non-empty clusters".into()));
    }
    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = grouping.assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[grouping.assignment[j]] += dist(points[i], points[j]);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Chooses each cluster's key image: the member nearest its centroid, ties
/// going to the lexicographically smaller id.
pub fn pick_key_images(features: &[FeatureVector], grouping: &SubGrouping) -> Result<SubGrouping> {
    let points = ordered_points(features, grouping)?;
    let mut keys: Vec<Option<(f64, &str)>> = vec![None; grouping.k];
    for (i, &c) in grouping.assignment.iter().enumerate() {
        let d = sq_dist(points[i], &grouping.centroids[c]);
        let id = grouping.image_ids[i].as_str();
        let better = match keys[c] {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && id < bid),
        };
        if better {
            keys[c] = Some((d, id));
        }
    }
    let key_images = keys
        .into_iter()
        .enumerate()
        .map(|(c, k)| {
            k.map(|(_, id)| id.to_string())
                .ok_or_else(|| CosegError::Argument(format!("cluster {} is empty", c + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubGrouping {
        key_images,
        ..grouping.clone()
    })
}

/// Default K search range `[2, min(10, ceil(m / 3))]` for a group of `m`.
pub fn default_k_range(m: usize) -> (usize, usize) {
    (2, 10.min(m.div_ceil(3)).max(2))
}

/// Groups smaller than this skip clustering and form a single sub-group.
pub const MIN_GROUP_FOR_CLUSTERING: usize = 4;

/// Picks K in `[k_min, min(k_max, m - 1)]` by maximal silhouette (ties go to
/// the smaller K), keeping the lowest-SSE of five seeded restarts per K.
/// Returns a complete grouping with key images.
pub fn select_k(features: &[FeatureVector], k_min: usize, k_max: usize, seed: u64) -> Result<SubGrouping> {
    let m = features.len();
    if m == 0 {
        return Err(CosegError::Argument("cannot group an empty image set".into()));
    }
    if m < MIN_GROUP_FOR_CLUSTERING {
        let single = kmeans(features, 1, seed)?;
        return pick_key_images(features, &single);
    }
    if k_min < 2 {
        return Err(CosegError::Argument("k_min must be at least 2".into()));
    }
    let upper = k_max.min(m - 1);
    if k_min > upper {
        return Err(CosegError::Argument(format!(
            "empty K range [{k_min}, {upper}] for {m} images"
        )));
    }

    let candidates: Vec<(usize, SubGrouping, f64)> = (k_min..=upper)
        .into_par_iter()
        .map(|k| {
            let mut best: Option<KMeansRun> = None;
            for r in 0..RESTARTS_PER_K {
                let run = kmeans_traced(features, k, seed.wrapping_add(r))?;
                if best.as_ref().is_none_or(|b| run.sse < b.sse) {
                    best = Some(run);
                }
            }
            let grouping = best.expect("at least one restart").grouping;
            let score = silhouette_score(features, &grouping)?;
            Ok((k, grouping, score))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut chosen: Option<&(usize, SubGrouping, f64)> = None;
    for cand in &candidates {
        if chosen.is_none_or(|c| cand.2 > c.2) {
            chosen = Some(cand);
        }
    }
    let (k, grouping, score) = chosen.expect("non-empty K range");
    log::debug!("selected K={k} with silhouette {score:.4}");
    pick_key_images(features, grouping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv1(id: &str, v: f64) -> FeatureVector {
        FeatureVector::new(id, vec![v])
    }

    fn partition_of(g: &SubGrouping) -> Vec<Vec<String>> {
        let mut parts: Vec<Vec<String>> = (0..g.k)
            .map(|c| g.members(c).into_iter().map(String::from).collect())
            .collect();
        parts.sort();
        parts
    }

    #[test]
    fn constant_gray_gives_constant_descriptor() {
        let img = RasterPlane::filled(13, 9, 3, 0.5).unwrap();
        let f = fallback_features("a", &img).unwrap();
        assert_eq!(f.values.len(), 192);
        assert!(f.values.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn red_and_blue_descriptors_are_sqrt_128_apart() {
        let red = RasterPlane::new(4, 4, 3, [1.0, 0.0, 0.0].repeat(16)).unwrap();
        let blue = RasterPlane::new(4, 4, 3, [0.0, 0.0, 1.0].repeat(16)).unwrap();
        let a = fallback_features("r", &red).unwrap();
        let b = fallback_features("b", &blue).unwrap();
        assert!((dist(&a.values, &b.values) - 11.313708498984761).abs() < 1e-12);
        assert_eq!(fallback_features("r", &red).unwrap().values, a.values);
    }

    #[test]
    fn two_means_on_line_matches_brute_force() {
        let pts = [0.0, 0.1, 10.0, 10.1];
        let feats: Vec<_> = pts.iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        // brute force over every 2-partition
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << pts.len()) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..pts.len())
                    .filter(|&i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| pts[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
            }
            if cost < best.0 {
                best = (cost, mask);
            }
        }
        let g = kmeans(&feats, 2, 7).unwrap();
        assert_eq!(
            partition_of(&g),
            vec![vec!["p0".to_string(), "p1".into()], vec!["p2".into(), "p3".into()]]
        );
        let same = |i: usize, j: usize| ((best.1 >> i) & 1) == ((best.1 >> j) & 1);
        assert!(same(0, 1) && same(2, 3) && !same(0, 2));
    }

    #[test]
    fn single_cluster_centroid_is_mean() {
        let feats: Vec<_> = [1.0, 2.0, 6.0].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = kmeans(&feats, 1, 0).unwrap();
        assert_eq!(g.centroids, vec![vec![3.0]]);
    }

    #[test]
    fn k_equal_n_gives_zero_sse() {
        let feats: Vec<_> = [1.0, 2.0, 6.0, -3.0].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let run = kmeans_traced(&feats, 4, 3).unwrap();
        assert_eq!(run.sse, 0.0);
    }

    #[test]
    fn kmeans_rejects_too_few_points() {
        let feats = vec![fv1("a", 0.0)];
        assert!(matches!(kmeans(&feats, 2, 0), Err(CosegError::Argument(_))));
    }

    fn silhouette_oracle(points: &[f64], labels: &[usize], k: usize) -> f64 {
        let n = points.len();
        let mut total = 0.0;
        for i in 0..n {
            let same: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
            if same.is_empty() {
                continue;
            }
            let a = same.iter().map(|&j| (points[i] - points[j]).abs()).sum::<f64>() / same.len() as f64;
            let mut b = f64::INFINITY;
            for c in 0..k {
                if c == labels[i] {
                    continue;
                }
                let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                let m = other.iter().map(|&j| (points[i] - points[j]).abs()).sum::<f64>() / other.len() as f64;
                b = b.min(m);
            }
            let d = a.max(b);
            total += if d > 0.0 { (b - a) / d } else { 0.0 };
        }
        total / n as f64
    }

    #[test]
    fn planted_silhouette_is_point_99() {
        let feats: Vec<_> = [0.0, 0.1, 10.0, 10.1].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = kmeans(&feats, 2, 1).unwrap();
        let s = silhouette_score(&feats, &g).unwrap();
        assert!((s - 0.99).abs() < 1e-3, "{s}");
        assert!((s - silhouette_oracle(&[0.0, 0.1, 10.0, 10.1], &g.assignment, 2)).abs() < 1e-12);
    }

    #[test]
    fn coincident_clusters_score_zero() {
        let feats: Vec<_> = (0..4).map(|i| fv1(&format!("p{i}"), 1.0)).collect();
        let g = SubGrouping {
            k: 2,
            image_ids: feats.iter().map(|f| f.image_id.clone()).collect(),
            assignment: vec![0, 0, 1, 1],
            centroids: vec![vec![1.0], vec![1.0]],
            key_images: vec![],
        };
        let s = silhouette_score(&feats, &g).unwrap();
        assert_eq!(s, silhouette_oracle(&[1.0; 4], &[0, 0, 1, 1], 2));
        assert!(s <= 0.0);
    }

    #[test]
    fn singleton_clustering_scores_zero() {
        let feats: Vec<_> = [0.0, 3.0, 7.0].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = kmeans(&feats, 3, 0).unwrap();
        assert_eq!(silhouette_score(&feats, &g).unwrap(), 0.0);
        let one = kmeans(&feats, 1, 0).unwrap();
        assert!(silhouette_score(&feats, &one).is_err());
    }

    #[test]
    fn tiny_groups_bypass_clustering() {
        let feats: Vec<_> = [0.0, 5.0, 10.0].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = select_k(&feats, 2, 6, 0).unwrap();
        assert_eq!(g.k, 1);
        assert_eq!(g.key_images, vec!["p1".to_string()]);
        assert!(select_k(&[], 2, 3, 0).is_err());
    }

    #[test]
    fn separated_pairs_select_two() {
        let feats: Vec<_> = [0.0, 0.2, 9.0, 9.3].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = select_k(&feats, 2, 3, 11).unwrap();
        // oracle: K=3 must split a pair, so its silhouette is lower
        let s2 = silhouette_oracle(&[0.0, 0.2, 9.0, 9.3], &[0, 0, 1, 1], 2);
        let s3a = silhouette_oracle(&[0.0, 0.2, 9.0, 9.3], &[0, 0, 1, 2], 3);
        let s3b = silhouette_oracle(&[0.0, 0.2, 9.0, 9.3], &[0, 1, 2, 2], 3);
        assert!(s2 > s3a && s2 > s3b);
        assert_eq!(g.k, 2);
    }

    #[test]
    fn key_is_member_nearest_centroid() {
        let feats: Vec<_> = [0.0, 1.0, 2.0].iter().enumerate().map(|(i, &v)| fv1(&format!("p{i}"), v)).collect();
        let g = pick_key_images(&feats, &kmeans(&feats, 1, 0).unwrap()).unwrap();
        assert_eq!(g.key_images, vec!["p1".to_string()]);
    }

    #[test]
    fn equidistant_key_tiebreak_is_lexicographic() {
        let feats = vec![fv1("b", 0.0), fv1("a", 0.9)];
        let g = kmeans(&feats, 1, 0).unwrap();
        assert_eq!(g.centroids[0][0], 0.45);
        let g = pick_key_images(&feats, &g).unwrap();
        assert_eq!(g.key_images, vec!["a".to_string()]);
    }

    #[test]
    fn singleton_cluster_is_its_own_key() {
        let feats = vec![fv1("x", 4.0), fv1("y", -4.0)];
        let g = pick_key_images(&feats, &kmeans(&feats, 2, 0).unwrap()).unwrap();
        let mut keys = g.key_images.clone();
        keys.sort();
        assert_eq!(keys, vec!["x".to_string(), "y".into()]);
    }

    #[test]
    fn feature_file_parsing() {
        let text = "a.png 1 2 3\nb.png 4 5 6\n";
        let f = parse_feature_file(text, Path::new("f.txt")).unwrap();
        assert_eq!(f[1].values, vec![4.0, 5.0, 6.0]);
        assert!(parse_feature_file("a 1 2\nb 1\n", Path::new("f")).is_err());
        assert!(parse_feature_file("a 1 x\n", Path::new("f")).is_err());
    }

    #[test]
    fn default_range_follows_group_size() {
        assert_eq!(default_k_range(4), (2, 2));
        assert_eq!(default_k_range(15), (2, 5));
        assert_eq!(default_k_range(100), (2, 10));
    }
}
