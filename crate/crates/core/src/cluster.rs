//! K-means and X-means clustering with BIC-driven choice of K.
//!
//! Points are sorted into a canonical order before any seeded step, so the
//! partition does not depend on input order.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {distinct} distinct points")]
    TooManyClusters { k: usize, distinct: usize },
    #[error("no points to cluster")]
    Empty,
    #[error("points have inconsistent dimensions")]
    Dimension,
    #[error("invalid clustering parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XmeansParams {
    pub use_kd_tree: bool,
    /// Lloyd iterations over the whole data set.
    pub max_iterations: usize,
    /// Rounds of split attempts.
    pub max_kmeans: usize,
    /// Lloyd iterations of each local 2-means split.
    pub max_kmeans_children: usize,
    pub seed: u64,
    pub max_clusters: usize,
    pub min_clusters: usize,
}

impl Default for XmeansParams {
    fn default() -> Self {
        XmeansParams {
            use_kd_tree: true,
            max_iterations: 1000,
            max_kmeans: 500,
            max_kmeans_children: 500,
            seed: 500,
            max_clusters: 500,
            min_clusters: 1,
        }
    }
}

impl XmeansParams {
    fn validate(&self) -> Result<(), ClusterError> {
        if self.min_clusters == 0
            || self.max_iterations == 0
            || self.max_kmeans == 0
            || self.max_kmeans_children == 0
        {
            return Err(ClusterError::Params("counts must be positive".into()));
        }
        if self.min_clusters > self.max_clusters {
            return Err(ClusterError::Params(
                "min_clusters exceeds max_clusters".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index of each input point, in input order.
    pub assignment: Vec<usize>,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub size: usize,
    /// Member nearest to the centroid (lowest index on ties).
    pub centroid_item: usize,
    pub members: Vec<usize>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == cluster)
            .collect()
    }

    pub fn sse(&self, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .zip(&self.assignment)
            .map(|(p, &c)| sq_dist(p, &self.centroids[c]))
            .sum()
    }

    pub fn summarize(&self, points: &[Vec<f64>]) -> Vec<ClusterSummary> {
        (0..self.k())
            .map(|c| {
                let members = self.members(c);
                let centroid_item = members
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        sq_dist(&points[a], &self.centroids[c])
                            .total_cmp(&sq_dist(&points[b], &self.centroids[c]))
                            .then(a.cmp(&b))
                    })
                    .unwrap_or(0);
                ClusterSummary {
                    size: members.len(),
                    centroid_item,
                    members,
                }
            })
            .collect()
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn distinct_count(sorted: &[&[f64]]) -> usize {
    sorted
        .windows(2)
        .filter(|w| cmp_points(w[0], w[1]).is_ne())
        .count()
        + usize::from(!sorted.is_empty())
}

fn check_points(points: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let d = points.first().ok_or(ClusterError::Empty)?.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(ClusterError::Dimension);
    }
    Ok(d)
}

/// Indices of `points` in canonical order.
fn canonical_order(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| cmp_points(&points[a], &points[b]).then(a.cmp(&b)));
    order
}

// ---- nearest-centroid search ----

enum KdNode {
    Leaf(Vec<usize>),
    Split {
        axis: usize,
        value: f64,
        left: Box<KdNode>,
        right: Box<KdNode>,
    },
}

/// Exact nearest-centroid index over a fixed centroid set.
struct Nearest<'a> {
    centroids: &'a [Vec<f64>],
    tree: Option<KdNode>,
}

impl<'a> Nearest<'a> {
    fn new(centroids: &'a [Vec<f64>], use_kd_tree: bool) -> Self {
        let tree = use_kd_tree.then(|| Self::build(centroids, (0..centroids.len()).collect(), 0));
        Nearest { centroids, tree }
    }

    fn build(centroids: &[Vec<f64>], mut ids: Vec<usize>, depth: usize) -> KdNode {
        let d = centroids.first().map_or(0, Vec::len);
        if ids.len() <= 4 || d == 0 {
            return KdNode::Leaf(ids);
        }
        let axis = depth % d;
        ids.sort_by(|&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        let mid = ids.len() / 2;
        let value = centroids[ids[mid]][axis];
        let right = ids.split_off(mid);
        KdNode::Split {
            axis,
            value,
            left: Box::new(Self::build(centroids, ids, depth + 1)),
            right: Box::new(Self::build(centroids, right, depth + 1)),
        }
    }

    fn better(best: &mut (f64, usize), cand: (f64, usize)) {
        if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
            *best = cand;
        }
    }

    fn search(&self, node: &KdNode, p: &[f64], best: &mut (f64, usize)) {
        match node {
            KdNode::Leaf(ids) => {
                for &i in ids {
                    Self::better(best, (sq_dist(p, &self.centroids[i]), i));
                }
            }
            KdNode::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = p[*axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, p, best);
                if diff * diff <= best.0 {
                    self.search(far, p, best);
                }
            }
        }
    }

    fn nearest(&self, p: &[f64]) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        match &self.tree {
            Some(tree) => self.search(tree, p, &mut best),
            None => {
                for (i, c) in self.centroids.iter().enumerate() {
                    Self::better(&mut best, (sq_dist(p, c), i));
                }
            }
        }
        best.1
    }
}

// ---- k-means ----

fn kmeans_pp(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut r = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if r < w {
                    break;
                }
                r -= w;
            }
        }
        let next = points[pick.expect("more distinct points than centroids")].to_vec();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

/// Lloyd iterations from the given centroids until the assignment is stable.
/// Empty clusters keep their previous centroid.
fn lloyd(
    points: &[&[f64]],
    mut centroids: Vec<Vec<f64>>,
    max_iterations: usize,
    use_kd_tree: bool,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = centroids[0].len();
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..max_iterations {
        let next: Vec<usize> = {
            let index = Nearest::new(&centroids, use_kd_tree);
            points.iter().map(|p| index.nearest(p)).collect()
        };
        if next == assignment {
            break;
        }
        assignment = next;
        let mut sums = vec![vec![0.0; d]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for (c, (sum, n)) in sums.into_iter().zip(counts).enumerate() {
            if n > 0 {
                centroids[c] = sum.into_iter().map(|s| s / n as f64).collect();
            }
        }
    }
    let index = Nearest::new(&centroids, use_kd_tree);
    let assignment = points.iter().map(|p| index.nearest(p)).collect();
    (centroids, assignment)
}

fn kmeans_sorted(
    sorted: &[&[f64]],
    k: usize,
    seed: u64,
    iterations: usize,
    use_kd_tree: bool,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), ClusterError> {
    let distinct = distinct_count(sorted);
    if k == 0 || k > distinct {
        return Err(ClusterError::TooManyClusters { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = kmeans_pp(sorted, k, &mut rng);
    Ok(lloyd(sorted, init, iterations, use_kd_tree))
}

fn unsort(order: &[usize], sorted_assignment: &[usize]) -> Vec<usize> {
    let mut out = vec![0; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        out[i] = sorted_assignment[pos];
    }
    out
}

/// Lloyd's k-means with k-means++ initialization.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    params: &XmeansParams,
) -> Result<ClusterModel, ClusterError> {
    check_points(points)?;
    let order = canonical_order(points);
    let sorted: Vec<&[f64]> = order.iter().map(|&i| points[i].as_slice()).collect();
    let (centroids, assignment) = kmeans_sorted(
        &sorted,
        k,
        params.seed,
        params.max_iterations,
        params.use_kd_tree,
    )?;
    let mut model = ClusterModel {
        centroids,
        assignment: unsort(&order, &assignment),
        bic: 0.0,
    };
    model.bic = bic(points, &model);
    Ok(model)
}

/// Bayesian information criterion of a spherical Gaussian mixture with one
/// shared variance, using the maximum-likelihood variance estimate
/// `SSE / (d (R - K))`. Higher is better.
pub fn bic(points: &[Vec<f64>], model: &ClusterModel) -> f64 {
    let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
    bic_of(&refs, &model.centroids, &model.assignment)
}

fn bic_of(points: &[&[f64]], centroids: &[Vec<f64>], assignment: &[usize]) -> f64 {
    let r = points.len() as f64;
    let k = centroids.len() as f64;
    let d = centroids.first().map_or(0, Vec::len) as f64;
    let sse: f64 = points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    let variance = (sse / (d * (r - k).max(1.0))).max(1e-12);
    let mut counts = vec![0usize; centroids.len()];
    for &c in assignment {
        counts[c] += 1;
    }
    let mixing: f64 = counts
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| n as f64 * (n as f64 / r).ln())
        .sum();
    let log_likelihood = mixing
        - r * d / 2.0 * (2.0 * std::f64::consts::PI * variance).ln()
        - sse / (2.0 * variance);
    let free = (k - 1.0) + k * d + 1.0;
    log_likelihood - free / 2.0 * r.ln()
}

fn mean(points: &[&[f64]]) -> Vec<f64> {
    let mut m = vec![0.0; points[0].len()];
    for p in points {
        for (a, v) in m.iter_mut().zip(p.iter()) {
            *a += v;
        }
    }
    m.iter().map(|v| v / points.len() as f64).collect()
}

/// X-means: start from `min_clusters` centroids and repeatedly try to split
/// every centroid with a local 2-means, keeping splits whose local BIC is
/// strictly higher than the unsplit region's.
pub fn xmeans(points: &[Vec<f64>], params: &XmeansParams) -> Result<ClusterModel, ClusterError> {
    params.validate()?;
    check_points(points)?;
    let order = canonical_order(points);
    let sorted: Vec<&[f64]> = order.iter().map(|&i| points[i].as_slice()).collect();
    let distinct = distinct_count(&sorted);
    let k0 = params.min_clusters.min(distinct);
    let (mut centroids, mut assignment) = kmeans_sorted(
        &sorted,
        k0,
        params.seed,
        params.max_iterations,
        params.use_kd_tree,
    )?;

    for round in 0..params.max_kmeans {
        if centroids.len() >= params.max_clusters {
            break;
        }
        let mut next = Vec::new();
        let mut split_any = false;
        for (c, centroid) in centroids.iter().enumerate() {
            let region: Vec<&[f64]> = sorted
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| *p)
                .collect();
            let room = next.len() + (centroids.len() - c) < params.max_clusters;
            if !room || distinct_count(&region) < 2 {
                next.push(centroid.clone());
                continue;
            }
            let parent = vec![mean(&region)];
            let parent_bic = bic_of(&region, &parent, &vec![0; region.len()]);
            let seed =
                params.seed ^ ((round as u64) << 32 | c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let (children, child_assignment) = kmeans_sorted(
                &region,
                2,
                seed,
                params.max_kmeans_children,
                params.use_kd_tree,
            )?;
            if bic_of(&region, &children, &child_assignment) > parent_bic {
                split_any = true;
                next.extend(children);
            } else {
                next.push(centroid.clone());
            }
        }
        if !split_any {
            break;
        }
        (centroids, assignment) = lloyd(&sorted, next, params.max_iterations, params.use_kd_tree);
    }

    // Drop clusters that lost all their members, keeping centroid order.
    let mut used: Vec<usize> = assignment.clone();
    used.sort_unstable();
    used.dedup();
    let remap: std::collections::BTreeMap<usize, usize> = used
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let centroids: Vec<Vec<f64>> = used.iter().map(|&c| centroids[c].clone()).collect();
    let assignment: Vec<usize> = assignment.iter().map(|c| remap[c]).collect();
    let mut model = ClusterModel {
        centroids,
        assignment: unsort(&order, &assignment),
        bic: 0.0,
    };
    model.bic = bic(points, &model);
    Ok(model)
}
