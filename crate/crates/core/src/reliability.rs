//! Cluster reliability via silhouette coefficients, and the one-level
//! coarse-to-fine decomposition of unreliable clusters.
//!
//! For an instance `i` in cluster `k`, `a(i)` is its mean distance to the
//! other members of `k` and `b(i)` the smallest mean distance to the members
//! of any other cluster. The silhouette `(b - a) / max(a, b)` lies in
//! `[-1, 1]`; a cluster's score is the mean over its members. Clusters scoring
//! at or below `alpha` are re-clustered in isolation with a radius of two
//! thirds of the coarse one.
//!
//! Conventions for degenerate inputs: a single-cluster partition scores 0
//! everywhere, and so does every member of a singleton cluster.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dbscan::{dbscan, Clustering, OUTLIER};
use crate::distance::DistanceMatrix;
use crate::error::{Result, UcfError};

/// Default reliability threshold; clusters with a mean silhouette at or
/// below it are decomposed.
pub const DEFAULT_ALPHA: f64 = 0.0;

/// Ratio between the fine and coarse DBSCAN radii.
pub const FINE_EPS_RATIO: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// Silhouette of every instance; `None` for outliers.
    pub per_instance: Vec<Option<f64>>,
    /// Mean member silhouette of every cluster.
    pub per_cluster: Vec<f64>,
    pub alpha: f64,
}

impl SilhouetteReport {
    /// Ids of clusters whose score is at or below `alpha`.
    pub fn unreliable(&self) -> Vec<usize> {
        self.per_cluster
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s <= self.alpha)
            .map(|(k, _)| k)
            .collect()
    }
}

fn cluster_of(c: &Clustering, i: usize) -> Result<usize> {
    if i >= c.n() {
        return Err(UcfError::IndexOutOfRange {
            index: i,
            len: c.n(),
        });
    }
    c.label(i).ok_or(UcfError::Unclustered(i))
}

/// Mean distance from `i` to the other members of its cluster.
pub fn intra_distance(dist: &DistanceMatrix, c: &Clustering, i: usize) -> Result<f64> {
    let k = cluster_of(c, i)?;
    let (sum, count) = c
        .labels()
        .iter()
        .enumerate()
        .filter(|&(j, &l)| j != i && l == k as i32)
        .fold((0.0, 0usize), |(s, n), (j, _)| (s + dist.get(i, j), n + 1));
    if count == 0 {
        return Err(UcfError::Singleton(i));
    }
    Ok(sum / count as f64)
}

/// Smallest mean distance from `i` to the members of another cluster.
pub fn inter_distance(dist: &DistanceMatrix, c: &Clustering, i: usize) -> Result<f64> {
    let k = cluster_of(c, i)?;
    if c.k() < 2 {
        return Err(UcfError::SingleCluster);
    }
    let (sums, counts) = distance_sums(dist, c, i);
    Ok(nearest_other(&sums, &counts, k))
}

/// Silhouette of a single instance.
pub fn instance_silhouette(dist: &DistanceMatrix, c: &Clustering, i: usize) -> Result<f64> {
    let a = intra_distance(dist, c, i)?;
    let b = inter_distance(dist, c, i)?;
    Ok(silhouette(a, b))
}

fn silhouette(a: f64, b: f64) -> f64 {
    let denom = a.max(b);
    if denom == 0.0 {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Per-cluster distance sums and member counts from instance `i`.
fn distance_sums(dist: &DistanceMatrix, c: &Clustering, i: usize) -> (Vec<f64>, Vec<usize>) {
    let mut sums = vec![0.0; c.k()];
    let mut counts = vec![0usize; c.k()];
    let row = dist.row(i);
    for (j, &l) in c.labels().iter().enumerate() {
        if l != OUTLIER && j != i {
            sums[l as usize] += row[j];
            counts[l as usize] += 1;
        }
    }
    (sums, counts)
}

fn nearest_other(sums: &[f64], counts: &[usize], own: usize) -> f64 {
    sums.iter()
        .zip(counts)
        .enumerate()
        .filter(|&(l, (_, &n))| l != own && n > 0)
        .map(|(_, (s, &n))| s / n as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Silhouettes of every clustered instance and their per-cluster means.
pub fn cluster_silhouette(dist: &DistanceMatrix, c: &Clustering, alpha: f64) -> SilhouetteReport {
    let sizes = c.cluster_sizes();
    let per_instance: Vec<Option<f64>> = (0..c.n())
        .into_par_iter()
        .map(|i| {
            let k = c.label(i)?;
            if c.k() < 2 || sizes[k] < 2 {
                return Some(0.0);
            }
            let (sums, counts) = distance_sums(dist, c, i);
            let a = sums[k] / counts[k] as f64;
            let b = nearest_other(&sums, &counts, k);
            Some(silhouette(a, b))
        })
        .collect();

    let mut totals = vec![0.0; c.k()];
    for (i, s) in per_instance.iter().enumerate() {
        if let (Some(k), Some(s)) = (c.label(i), s) {
            totals[k] += s;
        }
    }
    let per_cluster = totals
        .iter()
        .zip(&sizes)
        .map(|(t, &n)| t / n as f64)
        .collect();
    SilhouetteReport {
        per_instance,
        per_cluster,
        alpha,
    }
}

/// Everything produced by one coarse-to-fine pass.
#[derive(Debug, Clone)]
pub struct HierarchicalOutcome {
    pub coarse: Clustering,
    pub coarse_silhouette: SilhouetteReport,
    /// Coarse cluster ids that were decomposed.
    pub decomposed: Vec<usize>,
    pub refined: Clustering,
    /// Coarse parent of every refined cluster.
    pub parent: Vec<usize>,
}

/// Coarse DBSCAN at `eps`, then fine DBSCAN at `2 eps / 3` inside every
/// cluster whose mean silhouette is at most `alpha`.
pub fn hierarchical_cluster(
    dist: &DistanceMatrix,
    eps: f64,
    alpha: f64,
    min_pts: usize,
) -> Result<Clustering> {
    hierarchical_cluster_detailed(dist, eps, alpha, min_pts).map(|o| o.refined)
}

pub fn hierarchical_cluster_detailed(
    dist: &DistanceMatrix,
    eps: f64,
    alpha: f64,
    min_pts: usize,
) -> Result<HierarchicalOutcome> {
    let coarse = dbscan(dist, eps, min_pts)?;
    let coarse_silhouette = cluster_silhouette(dist, &coarse, alpha);
    let decomposed = coarse_silhouette.unreliable();
    let fine_eps = eps * FINE_EPS_RATIO;

    let members = coarse.members();
    let fine: Vec<Clustering> = decomposed
        .par_iter()
        .map(|&k| dbscan(&dist.restrict(&members[k]), fine_eps, min_pts))
        .collect::<Result<_>>()?;

    // reliable clusters keep their coarse id; fine clusters get fresh ids past K
    let mut labels = coarse.labels().to_vec();
    let mut next = coarse.k() as i32;
    for (&k, sub) in decomposed.iter().zip(&fine) {
        for (local, &global) in members[k].iter().enumerate() {
            labels[global] = match sub.label(local) {
                Some(l) => next + l as i32,
                None => OUTLIER,
            };
        }
        next += sub.k() as i32;
    }
    let refined = Clustering::from_labels(labels)?;
    let parent = refined
        .members()
        .iter()
        .map(|m| {
            coarse
                .label(m[0])
                .expect("refined members are coarse members")
        })
        .collect();

    Ok(HierarchicalOutcome {
        coarse,
        coarse_silhouette,
        decomposed,
        refined,
        parent,
    })
}
