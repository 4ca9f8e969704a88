//! Agreement between predicted clusters and ground-truth identities.

use std::collections::BTreeMap;

use crate::dbscan::OUTLIER;
use crate::error::{Result, UcfError};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Cluster(i32),
    Singleton(usize),
}

fn keyed(labels: &[i32]) -> impl Iterator<Item = Key> + '_ {
    labels.iter().enumerate().map(|(i, &l)| {
        if l == OUTLIER {
            Key::Singleton(i)
        } else {
            Key::Cluster(l)
        }
    })
}

fn entropy(counts: &BTreeMap<Key, usize>, n: f64) -> f64 {
    let mut terms: Vec<f64> = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Normalized mutual information `I(A; B) / sqrt(H(A) H(B))`.
///
/// Outliers (`-1`) in either labeling are treated as singleton clusters.
/// Two zero-entropy labelings score 1.
pub fn nmi(a: &[i32], b: &[i32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(UcfError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let mut ca: BTreeMap<Key, usize> = BTreeMap::new();
    let mut cb: BTreeMap<Key, usize> = BTreeMap::new();
    let mut joint: BTreeMap<(Key, Key), usize> = BTreeMap::new();
    for (ka, kb) in keyed(a).zip(keyed(b)) {
        *ca.entry(ka).or_default() += 1;
        *cb.entry(kb).or_default() += 1;
        *joint.entry((ka, kb)).or_default() += 1;
    }
    let (ha, hb) = (entropy(&ca, n), entropy(&cb, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    // sorted summation keeps nmi(a, b) == nmi(b, a) bit for bit
    let mut cells: Vec<f64> = joint
        .iter()
        .map(|(&(ka, kb), &c)| {
            let pj = c as f64 / n;
            let pa = ca[&ka] as f64 / n;
            let pb = cb[&kb] as f64 / n;
            pj * (pj / (pa * pb)).ln()
        })
        .collect();
    cells.sort_by(f64::total_cmp);
    let mi: f64 = cells.iter().sum();
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Share of clustered instances whose cluster's majority identity matches
/// their own, optionally restricted to `subset`.
pub fn purity(pred: &[i32], truth: &[i32], subset: Option<&[bool]>) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(UcfError::LengthMismatch(pred.len(), truth.len()));
    }
    if let Some(s) = subset {
        if s.len() != pred.len() {
            return Err(UcfError::LengthMismatch(pred.len(), s.len()));
        }
    }
    let mut table: BTreeMap<i32, BTreeMap<i32, usize>> = BTreeMap::new();
    let mut total = 0usize;
    for i in 0..pred.len() {
        if pred[i] == OUTLIER || subset.is_some_and(|s| !s[i]) {
            continue;
        }
        *table
            .entry(pred[i])
            .or_default()
            .entry(truth[i])
            .or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(UcfError::EmptySubset);
    }
    let majority: usize = table
        .values()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_and_permuted_labels() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        let b = [5, 5, 3, 3, 9, 9, 9];
        assert_abs_diff_eq!(nmi(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nmi(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn independent_labels_score_zero() {
        assert_abs_diff_eq!(
            nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn constant_labelings() {
        assert_eq!(nmi(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[3, 3, 3], &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn outliers_are_singletons() {
        // all-outlier prediction equals the all-distinct truth
        assert_abs_diff_eq!(
            nmi(&[-1, -1, -1], &[0, 1, 2]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn nmi_length_mismatch() {
        assert!(matches!(
            nmi(&[0], &[0, 1]),
            Err(UcfError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn purity_cases() {
        let truth = [0, 0, 1, 1];
        assert_eq!(purity(&truth, &truth, None).unwrap(), 1.0);
        assert_eq!(purity(&[0, 1, 0, 1], &truth, None).unwrap(), 0.5);
        assert_eq!(purity(&[0, 0, 0, -1], &truth, None).unwrap(), 2.0 / 3.0);
        let subset = [true, true, false, false];
        assert_eq!(purity(&[0, 0, 0, 0], &truth, Some(&subset)).unwrap(), 1.0);
        assert!(matches!(
            purity(&[-1, 0, 0, 0], &truth, Some(&[true, false, false, false])),
            Err(UcfError::EmptySubset)
        ));
    }
}
