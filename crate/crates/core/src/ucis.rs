//! Temporal averaging of parameters and collaborative instance selection
//! between a main model and its temporal average.
//!
//! An instance is kept when the cluster it falls in under the main model is
//! largely reproduced by the cluster it falls in under the averaged model:
//! `U(i) = |I_k ∩ J_l| / |I_k|`, where `I_k` is the main cluster and `J_l`
//! the averaged-model cluster containing `i`. The ratio is normalized by the
//! main cluster only, so it is not symmetric in the two clusterings.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dbscan::Clustering;
use crate::error::{Result, UcfError};

/// Default momentum of the temporal average.
pub const DEFAULT_SIGMA: f64 = 0.999;
/// Default uncertainty threshold; instances need `U > beta`.
pub const DEFAULT_BETA: f64 = 0.8;

/// Flat parameter vector (or a flattened embedding matrix).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

/// `sigma * avg + (1 - sigma) * current`, elementwise.
pub fn ema_update(avg: &ParamVector, current: &ParamVector, sigma: f64) -> Result<ParamVector> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(UcfError::BadParam(format!(
            "sigma must lie in [0, 1), got {sigma}"
        )));
    }
    if avg.len() != current.len() {
        return Err(UcfError::LengthMismatch(avg.len(), current.len()));
    }
    if sigma == 0.0 {
        return Ok(current.clone());
    }
    Ok(ParamVector(
        avg.0
            .iter()
            .zip(&current.0)
            .map(|(a, c)| sigma * a + (1.0 - sigma) * c)
            .collect(),
    ))
}

/// Uncertainty scores and the resulting keep/drop flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMask {
    pub n: usize,
    pub beta: f64,
    pub uncertainty: Vec<f64>,
    pub selected: Vec<bool>,
}

impl SelectionMask {
    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn selected_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.selected_count() as f64 / self.n as f64
        }
    }
}

/// `U(i)` for one instance; 0 if `i` is an outlier in either clustering.
pub fn instance_uncertainty(main: &Clustering, mean: &Clustering, i: usize) -> Result<f64> {
    if main.n() != mean.n() {
        return Err(UcfError::LengthMismatch(main.n(), mean.n()));
    }
    if i >= main.n() {
        return Err(UcfError::IndexOutOfRange {
            index: i,
            len: main.n(),
        });
    }
    let (Some(k), Some(l)) = (main.label(i), mean.label(i)) else {
        return Ok(0.0);
    };
    let (mut size, mut overlap) = (0usize, 0usize);
    for j in 0..main.n() {
        if main.label(j) == Some(k) {
            size += 1;
            if mean.label(j) == Some(l) {
                overlap += 1;
            }
        }
    }
    Ok(overlap as f64 / size as f64)
}

/// Scores every instance and keeps those clustered by the main model with
/// `U > beta`.
pub fn select_reliable(main: &Clustering, mean: &Clustering, beta: f64) -> Result<SelectionMask> {
    if main.n() != mean.n() {
        return Err(UcfError::LengthMismatch(main.n(), mean.n()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(UcfError::BadParam(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let sizes = main.cluster_sizes();
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..main.n() {
        if let (Some(k), Some(l)) = (main.label(i), mean.label(i)) {
            *overlap.entry((k, l)).or_default() += 1;
        }
    }
    let uncertainty: Vec<f64> = (0..main.n())
        .map(|i| match (main.label(i), mean.label(i)) {
            (Some(k), Some(l)) => overlap[&(k, l)] as f64 / sizes[k] as f64,
            _ => 0.0,
        })
        .collect();
    let selected = uncertainty
        .iter()
        .enumerate()
        .map(|(i, &u)| !main.is_outlier(i) && u > beta)
        .collect();
    Ok(SelectionMask {
        n: main.n(),
        beta,
        uncertainty,
        selected,
    })
}
