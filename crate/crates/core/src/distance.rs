//! Pairwise distances: plain Euclidean, and the Jaccard distance between
//! k-reciprocal expanded neighborhoods built on top of it.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Result, UcfError};

/// Default neighborhood size for k-reciprocal sets.
pub const DEFAULT_K1: usize = 30;

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Euclidean,
    Jaccard,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Jaccard => "jaccard",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = UcfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "jaccard" => Ok(DistanceKind::Jaccard),
            other => Err(UcfError::BadParam(format!(
                "unknown distance kind `{other}`"
            ))),
        }
    }
}

/// Symmetric `n x n` distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    kind: DistanceKind,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major values, checking symmetry, the zero
    /// diagonal, non-negativity and (for Jaccard) the upper bound of 1.
    pub fn from_values(n: usize, values: Vec<f64>, kind: DistanceKind) -> Result<Self> {
        if values.len() != n * n {
            return Err(UcfError::Shape {
                expected: n * n,
                got: values.len(),
            });
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(UcfError::BadParam(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() {
                    return Err(UcfError::NonFinite(i, j));
                }
                if v < 0.0 || (kind == DistanceKind::Jaccard && v > 1.0) {
                    return Err(UcfError::BadParam(format!(
                        "entry ({i}, {j}) = {v} out of range"
                    )));
                }
                if (v - values[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(UcfError::BadParam(format!(
                        "entry ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(Self { n, kind, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Sub-matrix over `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let m = indices.len();
        let mut values = Vec::with_capacity(m * m);
        for &i in indices {
            let row = self.row(i);
            values.extend(indices.iter().map(|&j| row[j]));
        }
        Self {
            n: m,
            kind: self.kind,
            values,
        }
    }
}

/// `||f_i - f_j||` for every pair of rows.
pub fn pairwise_euclidean(emb: &EmbeddingSet) -> DistanceMatrix {
    let n = emb.n();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let a = emb.row(i);
        for (j, slot) in out.iter_mut().enumerate() {
            if i != j {
                *slot = a
                    .iter()
                    .zip(emb.row(j))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    });
    DistanceMatrix {
        n,
        kind: DistanceKind::Euclidean,
        values,
    }
}

/// Expanded k-reciprocal neighborhood of every instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborSets {
    k1: usize,
    sets: Vec<Vec<usize>>,
}

impl NeighborSets {
    /// Wraps precomputed sets. Each set is sorted and deduplicated; `i` is
    /// inserted into `sets[i]` if missing.
    pub fn from_sets(k1: usize, mut sets: Vec<Vec<usize>>) -> Result<Self> {
        let n = sets.len();
        for (i, set) in sets.iter_mut().enumerate() {
            if let Some(&bad) = set.iter().find(|&&j| j >= n) {
                return Err(UcfError::IndexOutOfRange { index: bad, len: n });
            }
            set.push(i);
            set.sort_unstable();
            set.dedup();
        }
        Ok(Self { k1, sets })
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.sets.iter().map(Vec::as_slice)
    }
}

/// Nearest-first ordering of the other `k` instances around each point,
/// ties broken by the smaller index.
struct Ranking {
    prefix: Vec<Vec<usize>>,
}

impl Ranking {
    fn new(dist: &DistanceMatrix, k: usize) -> Self {
        let n = dist.n();
        let prefix = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = dist.row(i);
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let by_dist = |a: &usize, b: &usize| -> Ordering {
                    row[*a].total_cmp(&row[*b]).then(a.cmp(b))
                };
                if k < others.len() {
                    others.select_nth_unstable_by(k, by_dist);
                    others.truncate(k);
                }
                others.sort_unstable_by(by_dist);
                others
            })
            .collect();
        Self { prefix }
    }

    /// Whether `j` lies in the `k`-nearest set of `i` (which includes `i`).
    fn contains(&self, i: usize, k: usize, j: usize) -> bool {
        i == j || self.prefix[i][..k].contains(&j)
    }

    /// `{ j in N(i, k) : i in N(j, k) }`, sorted.
    fn reciprocal(&self, i: usize, k: usize) -> Vec<usize> {
        let mut out: Vec<usize> = std::iter::once(i)
            .chain(self.prefix[i][..k].iter().copied())
            .filter(|&j| self.contains(j, k, i))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Builds the expanded k-reciprocal neighborhood `R*(i)` for every instance
/// from a Euclidean distance matrix.
///
/// `R(i)` keeps the `k1` nearest neighbors of `i` that also rank `i` among
/// their own `k1` nearest. It is then expanded by `R(q, ceil(k1/2))` for each
/// `q` in `R(i)` whose half-size reciprocal set overlaps `R(i)` in at least
/// two thirds of its members.
pub fn k_reciprocal_neighbors(dist: &DistanceMatrix, k1: usize) -> Result<NeighborSets> {
    if dist.kind() != DistanceKind::Euclidean {
        return Err(UcfError::WrongDistanceKind);
    }
    let n = dist.n();
    if k1 == 0 || k1 >= n {
        return Err(UcfError::BadK { k1, n });
    }
    let half = k1.div_ceil(2);
    let ranking = Ranking::new(dist, k1);
    let full: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| ranking.reciprocal(i, k1))
        .collect();
    let halves: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| ranking.reciprocal(i, half))
        .collect();

    let sets = full
        .par_iter()
        .map(|base| {
            let mut expanded = base.clone();
            for &q in base {
                let candidate = &halves[q];
                if 3 * sorted_intersection_len(base, candidate) >= 2 * candidate.len() {
                    expanded.extend_from_slice(candidate);
                }
            }
            expanded.sort_unstable();
            expanded.dedup();
            expanded
        })
        .collect();
    Ok(NeighborSets { k1, sets })
}

/// `1 - |R*(i) ∩ R*(j)| / |R*(i) ∪ R*(j)|` for every pair.
pub fn jaccard_distance(neighbors: &NeighborSets) -> DistanceMatrix {
    let n = neighbors.len();
    let mut inverted: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, set) in neighbors.iter().enumerate() {
        for &e in set {
            inverted[e].push(i);
        }
    }

    let mut values = vec![1.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let own = neighbors.get(i);
        let mut shared = vec![0usize; n];
        for &e in own {
            for &j in &inverted[e] {
                shared[j] += 1;
            }
        }
        for (j, &c) in shared.iter().enumerate() {
            if c > 0 {
                let union = own.len() + neighbors.get(j).len() - c;
                out[j] = 1.0 - c as f64 / union as f64;
            }
        }
        out[i] = 0.0;
    });
    DistanceMatrix {
        n,
        kind: DistanceKind::Jaccard,
        values,
    }
}

/// Euclidean distances, or Jaccard distances over k-reciprocal sets.
pub fn build_distances(
    emb: &EmbeddingSet,
    kind: DistanceKind,
    k1: usize,
) -> Result<DistanceMatrix> {
    let euclidean = pairwise_euclidean(emb);
    match kind {
        DistanceKind::Euclidean => Ok(euclidean),
        DistanceKind::Jaccard => {
            let neighbors = k_reciprocal_neighbors(&euclidean, k1)?;
            Ok(jaccard_distance(&neighbors))
        }
    }
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}
