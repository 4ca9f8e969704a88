#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ucf_core::{DistanceKind, DistanceMatrix, EmbeddingSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<f64> {
    (0..n * dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn random_embeddings(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> EmbeddingSet {
    EmbeddingSet::validate_and_normalize(n, dim, gaussian_rows(rng, n, dim)).unwrap()
}

/// Unit vectors scattered around `centers` random directions.
pub fn blobs(
    rng: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    centers: usize,
    spread: f64,
) -> (EmbeddingSet, Vec<i32>) {
    let c = gaussian_rows(rng, centers, dim);
    let mut data = Vec::with_capacity(n * dim);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(0..centers);
        for d in 0..dim {
            data.push(c[k * dim + d] + spread * rng.sample::<f64, _>(StandardNormal));
        }
        truth.push(k as i32);
    }
    (
        EmbeddingSet::validate_and_normalize(n, dim, data).unwrap(),
        truth,
    )
}

/// Straightforward O(n^2 dim) Euclidean matrix.
pub fn euclidean(emb: &EmbeddingSet) -> DistanceMatrix {
    let n = emb.n();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let s: f64 = emb
                    .row(i)
                    .iter()
                    .zip(emb.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                v[i * n + j] = s.sqrt();
            }
        }
    }
    DistanceMatrix::from_values(n, v, DistanceKind::Euclidean).unwrap()
}

/// Co-membership relation of a labeling; outliers belong to nothing.
pub fn comembership(labels: &[i32]) -> Vec<Vec<bool>> {
    labels
        .iter()
        .map(|&a| labels.iter().map(|&b| a >= 0 && a == b).collect())
        .collect()
}
