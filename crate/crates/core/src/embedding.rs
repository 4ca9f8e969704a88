//! Row-major embedding containers.
//!
//! Every [`EmbeddingSet`] row is an L2-normalized feature vector. Values are
//! held as `f64` regardless of the on-disk precision so that distance
//! computations downstream can be compared against scalar oracles tightly.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UcfError};

/// Tolerance on row norms accepted by [`EmbeddingSet::from_unit_rows`].
pub const UNIT_NORM_TOL: f64 = 1e-6;

const ZERO_NORM: f64 = 1e-12;

/// `n` unit-norm feature vectors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    /// Validates a raw `n x dim` matrix and rescales every row to unit norm.
    pub fn validate_and_normalize(n: usize, dim: usize, mut data: Vec<f64>) -> Result<Self> {
        check_shape(n, dim, &data)?;
        for (i, row) in data.chunks_exact_mut(dim).enumerate() {
            let norm = l2_norm(row);
            if norm < ZERO_NORM {
                return Err(UcfError::ZeroRow(i));
            }
            row.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(Self { n, dim, data })
    }

    /// Like [`validate_and_normalize`](Self::validate_and_normalize), taking
    /// one `Vec` per row.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * dim);
        for row in rows {
            if row.len() != dim {
                return Err(UcfError::Shape {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Self::validate_and_normalize(n, dim, data)
    }

    /// Wraps rows that are already unit-norm, leaving values bit-for-bit
    /// untouched. Fails if any row is off by more than [`UNIT_NORM_TOL`].
    pub fn from_unit_rows(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(n, dim, &data)?;
        for (i, row) in data.chunks_exact(dim).enumerate() {
            let norm = l2_norm(row);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(UcfError::NotUnitNorm { row: i, norm });
            }
        }
        Ok(Self { n, dim, data })
    }

    /// Accepts rows as-is when they are already unit-norm, otherwise
    /// normalizes them. Used by file readers so that stored unit vectors
    /// survive a round trip unchanged.
    pub fn from_raw(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(n, dim, &data)?;
        let all_unit = data
            .chunks_exact(dim)
            .all(|row| (l2_norm(row) - 1.0).abs() <= UNIT_NORM_TOL);
        if all_unit {
            Ok(Self { n, dim, data })
        } else {
            Self::validate_and_normalize(n, dim, data)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Returns the rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n: indices.len(),
            dim: self.dim,
            data,
        }
    }
}

fn check_shape(n: usize, dim: usize, data: &[f64]) -> Result<()> {
    if n == 0 || dim == 0 {
        return Err(UcfError::Empty);
    }
    if data.len() != n * dim {
        return Err(UcfError::Shape {
            expected: n * dim,
            got: data.len(),
        });
    }
    if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
        return Err(UcfError::NonFinite(pos / dim, pos % dim));
    }
    Ok(())
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales `v` to unit norm in place. Leaves a zero vector untouched.
pub(crate) fn normalize_in_place(v: &mut [f64]) {
    let norm = l2_norm(v);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn scales_three_four_row() {
        let e = EmbeddingSet::validate_and_normalize(1, 2, vec![3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(e.row(0)[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(e.row(0)[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn unit_row_is_unchanged() {
        let row = vec![0.6, 0.8, 0.0];
        let e = EmbeddingSet::validate_and_normalize(1, 3, row.clone()).unwrap();
        for (a, b) in e.row(0).iter().zip(&row) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn random_gaussian_rows_become_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<f64> = (0..100 * 16)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let e = EmbeddingSet::validate_and_normalize(100, 16, data).unwrap();
        for row in e.rows() {
            assert_abs_diff_eq!(l2_norm(row), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_row_is_rejected() {
        let err = EmbeddingSet::validate_and_normalize(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, UcfError::ZeroRow(1)));
    }

    #[test]
    fn non_finite_is_located() {
        let err =
            EmbeddingSet::validate_and_normalize(2, 2, vec![1.0, 0.0, 0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, UcfError::NonFinite(1, 1)));
        let err = EmbeddingSet::validate_and_normalize(1, 2, vec![f64::INFINITY, 0.0]).unwrap_err();
        assert!(matches!(err, UcfError::NonFinite(0, 0)));
    }

    #[test]
    fn from_unit_rows_rejects_off_norm() {
        let err = EmbeddingSet::from_unit_rows(1, 2, vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, UcfError::NotUnitNorm { row: 0, .. }));
    }

    #[test]
    fn from_raw_keeps_unit_rows_bitwise() {
        let x = (0.3f32 as f64, (1.0 - 0.09f64).sqrt() as f32 as f64);
        let e = EmbeddingSet::from_raw(1, 2, vec![x.0, x.1]).unwrap();
        assert_eq!(e.row(0)[0].to_bits(), x.0.to_bits());
        assert_eq!(e.row(0)[1].to_bits(), x.1.to_bits());
    }
}
