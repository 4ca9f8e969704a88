//! Deterministic DBSCAN over a precomputed distance matrix.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Result, UcfError};

/// Label of an instance that belongs to no cluster.
pub const OUTLIER: i32 = -1;

/// Default coarse neighborhood radius.
pub const DEFAULT_EPS: f64 = 0.6;
/// Default minimum neighborhood size (including the point itself) of a core point.
pub const DEFAULT_MIN_PTS: usize = 4;

/// Per-instance cluster ids in `[0, k)`, or [`OUTLIER`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ClusteringRepr", into = "ClusteringRepr")]
pub struct Clustering {
    labels: Vec<i32>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct ClusteringRepr {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    labels: Vec<i32>,
}

impl From<Clustering> for ClusteringRepr {
    fn from(c: Clustering) -> Self {
        ClusteringRepr {
            n: c.labels.len(),
            k: c.k,
            labels: c.labels,
        }
    }
}

impl TryFrom<ClusteringRepr> for Clustering {
    type Error = UcfError;

    fn try_from(r: ClusteringRepr) -> Result<Self> {
        if r.n != r.labels.len() {
            return Err(UcfError::LengthMismatch(r.n, r.labels.len()));
        }
        let c = Clustering::from_labels(r.labels)?;
        if c.k != r.k {
            return Err(UcfError::BadParam(format!(
                "K = {} but labels use {} distinct clusters",
                r.k, c.k
            )));
        }
        Ok(c)
    }
}

impl Clustering {
    /// Accepts arbitrary non-negative ids (plus [`OUTLIER`]) and compacts
    /// them into canonical order.
    pub fn from_labels(labels: Vec<i32>) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l < OUTLIER) {
            return Err(UcfError::BadParam(format!(
                "label {} at position {pos} is neither a cluster id nor -1",
                labels[pos]
            )));
        }
        Ok(canonicalize_labels(&labels))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        let l = self.labels[i];
        (l != OUTLIER).then_some(l as usize)
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.labels[i] == OUTLIER
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }

    /// Member indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != OUTLIER {
                out[l as usize].push(i);
            }
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l != OUTLIER {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Whether `i` and `j` share a cluster. Outliers share nothing.
    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.labels[i] != OUTLIER && self.labels[i] == self.labels[j]
    }

    /// Marks every member of the listed clusters as an outlier and
    /// re-canonicalizes the ids.
    pub fn drop_clusters(&self, dropped: &[usize]) -> Clustering {
        let labels: Vec<i32> = self
            .labels
            .iter()
            .map(|&l| {
                if l != OUTLIER && dropped.contains(&(l as usize)) {
                    OUTLIER
                } else {
                    l
                }
            })
            .collect();
        canonicalize_labels(&labels)
    }
}

/// Relabels clusters so that ids ascend with each cluster's smallest member
/// index. The partition itself is unchanged.
pub fn canonicalize(c: &Clustering) -> Clustering {
    canonicalize_labels(&c.labels)
}

fn canonicalize_labels(labels: &[i32]) -> Clustering {
    let mut map = std::collections::HashMap::new();
    let mut next = 0i32;
    let labels = labels
        .iter()
        .map(|&l| {
            if l == OUTLIER {
                OUTLIER
            } else {
                *map.entry(l).or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            }
        })
        .collect();
    Clustering {
        labels,
        k: next as usize,
    }
}

/// Indices within `eps` of each instance (inclusive, the instance itself
/// included).
fn neighborhoods(dist: &DistanceMatrix, eps: f64) -> Vec<Vec<usize>> {
    (0..dist.n())
        .map(|i| {
            dist.row(i)
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d <= eps)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Core flags for the given radius: a core point has at least `min_pts`
/// instances, itself included, within `eps`.
pub fn core_points(dist: &DistanceMatrix, eps: f64, min_pts: usize) -> Vec<bool> {
    neighborhoods(dist, eps)
        .iter()
        .map(|nb| nb.len() >= min_pts)
        .collect()
}

/// DBSCAN over a precomputed distance matrix.
///
/// Cores are grown into clusters in ascending index order. A border point
/// reachable from cores of several clusters joins the cluster of the
/// lowest-index core within `eps` of it. The result is canonicalized.
pub fn dbscan(dist: &DistanceMatrix, eps: f64, min_pts: usize) -> Result<Clustering> {
    if !(eps > 0.0) {
        return Err(UcfError::BadEps(eps));
    }
    if min_pts == 0 {
        return Err(UcfError::BadMinPts);
    }
    let n = dist.n();
    let nbrs = neighborhoods(dist, eps);
    let is_core: Vec<bool> = nbrs.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels = vec![OUTLIER; n];
    let mut next = 0i32;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !is_core[seed] || labels[seed] != OUTLIER {
            continue;
        }
        labels[seed] = next;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &nbrs[p] {
                if is_core[q] && labels[q] == OUTLIER {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }

    for p in 0..n {
        if is_core[p] {
            continue;
        }
        // neighborhoods are ascending, so the first core found is the lowest-index one
        if let Some(&c) = nbrs[p].iter().find(|&&q| is_core[q]) {
            labels[p] = labels[c];
        }
    }
    Ok(canonicalize_labels(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::DistanceKind;

    fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> DistanceMatrix {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    v[i * n + j] = f(i.min(j), i.max(j));
                }
            }
        }
        DistanceMatrix::from_values(n, v, DistanceKind::Euclidean).unwrap()
    }

    #[test]
    fn everything_close_is_one_cluster() {
        let d = matrix(6, |_, _| 0.1);
        let c = dbscan(&d, 0.5, 4).unwrap();
        assert_eq!(c.k(), 1);
        assert_eq!(c.outlier_count(), 0);
    }

    #[test]
    fn everything_far_is_noise() {
        let d = matrix(6, |_, _| 0.9);
        let c = dbscan(&d, 0.5, 2).unwrap();
        assert_eq!(c.k(), 0);
        assert!(c.labels().iter().all(|&l| l == OUTLIER));
    }

    #[test]
    fn border_goes_to_lowest_index_core() {
        // cores {0..4} and {5..9}; point 4 is within eps of cores 3 and 5 only
        let d = matrix(9, |i, j| match (i, j) {
            (0..=3, 0..=3) | (5..=8, 5..=8) => 0.1,
            (3, 4) | (4, 5) => 0.4,
            _ => 5.0,
        });
        let core = core_points(&d, 0.5, 4);
        assert!(core[3] && core[5] && !core[4]);
        let c = dbscan(&d, 0.5, 4).unwrap();
        assert_eq!(c.labels(), &[0, 0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = matrix(3, |_, _| 1.0);
        assert!(matches!(dbscan(&d, 0.0, 2), Err(UcfError::BadEps(_))));
        assert!(matches!(dbscan(&d, f64::NAN, 2), Err(UcfError::BadEps(_))));
        assert!(matches!(dbscan(&d, 1.0, 0), Err(UcfError::BadMinPts)));
    }

    #[test]
    fn canonicalize_orders_by_first_member() {
        let c = Clustering {
            labels: vec![1, 1, 0, 0],
            k: 2,
        };
        assert_eq!(canonicalize(&c).labels(), &[0, 0, 1, 1]);
        let again = canonicalize(&canonicalize(&c));
        assert_eq!(again, canonicalize(&c));
    }

    #[test]
    fn json_uses_capital_k() {
        let c = Clustering::from_labels(vec![0, -1, 1, 0]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"n":4,"K":2,"labels":[0,-1,1,0]}"#);
        let back: Clustering = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(
            serde_json::from_str::<Clustering>(r#"{"n":3,"K":2,"labels":[0,-1,1,0]}"#).is_err()
        );
    }

    #[test]
    fn drop_clusters_turns_members_into_outliers() {
        let c = Clustering::from_labels(vec![0, 1, 1, 2, 0]).unwrap();
        let d = c.drop_clusters(&[1]);
        assert_eq!(d.labels(), &[0, -1, -1, 1, 0]);
        assert_eq!(d.k(), 2);
    }
}
